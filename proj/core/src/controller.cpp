#include "dlsim/controller.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace dlsim {

  namespace {
    int directionInto(Lane target) { return target == Lane::Right ? +1 : -1; }

    std::vector<double> penaltyLog(VehicleState const& v, ControlParams const& params) {
      if (params.count_forced_in_penalty) {
        return v.lane_change_log;
      }
      std::vector<double> out;
      for (std::size_t k = 0; k < v.lane_change_log.size(); ++k) {
        if (k >= v.lane_change_kinds.size() || v.lane_change_kinds[k] != LaneChangeKind::Forced) {
          out.push_back(v.lane_change_log[k]);
        }
      }
      return out;
    }

    /// Tie-break for entry lanes: onward-connecting first, then Left.
    bool preferOnward(NetworkModel const& net,
                      EdgeId edge,
                      std::optional<EdgeId> following,
                      Lane a,
                      Lane b) {
      if (following) {
        bool const ca = net.connects(edge, a, *following);
        bool const cb = net.connects(edge, b, *following);
        if (ca != cb) {
          return ca;
        }
      }
      return a < b;
    }

    template <class Score>
    Lane pickEntryLane(World const& world,
                       EdgeId edge,
                       std::optional<EdgeId> following,
                       LaneSet candidates,
                       Score score,
                       bool onwardFirst) {
      auto const& net = world.network();
      std::vector<Lane> pool;
      for (auto lane : {Lane::Left, Lane::Right}) {
        if (candidates.contains(lane)) {
          pool.push_back(lane);
        }
      }
      if (pool.empty()) {
        return Lane::Left;
      }
      if (onwardFirst && following) {
        std::vector<Lane> onward;
        std::copy_if(pool.begin(), pool.end(), std::back_inserter(onward),
                     [&](Lane l) { return net.connects(edge, l, *following); });
        if (!onward.empty()) {
          pool = onward;
        }
      }
      auto best = pool.front();
      for (std::size_t k = 1; k < pool.size(); ++k) {
        auto const sa = score(pool[k]);
        auto const sb = score(best);
        if (sa > sb || (sa == sb && preferOnward(net, edge, following, pool[k], best))) {
          best = pool[k];
        }
      }
      return best;
    }

    // Every CAV compares the current engine speeds of its segment and the adjacent one; no
    // coordination between movers.
    std::vector<LaneAction> myopicMoves(World const& world, ProtectionResult const* protection) {
      std::vector<LaneAction> out;
      for (auto const& v : world.vehicles()) {
        if (!v.active() || v.cls != VehicleClass::CAV) {
          continue;
        }
        auto const from = v.segment;
        auto const to = adjacent(from);
        auto const dir = directionInto(to.lane);
        if (protection) {
          bool const forced = std::any_of(protection->forced.begin(), protection->forced.end(),
                                          [&](LaneAction const& a) { return a.vehicle == v.id; });
          if (forced || (dir == +1 && protection->banned(v.id, to))) {
            continue;
          }
        }
        if (world.segment_speed(to) > world.segment_speed(from)) {
          LaneAction a;
          a.vehicle = v.id;
          a.from = from;
          a.direction = dir;
          a.kind = LaneChangeKind::Myopic;
          out.push_back(a);
        }
      }
      return out;
    }

    std::vector<RerouteAssignment> dynamicReroutes(World const& world, ControlParams const& params) {
      auto const& net = world.network();
      auto const costs = instantaneous_costs(world, VehicleClass::CAV);
      std::vector<RerouteAssignment> out;
      for (auto const& v : world.vehicles()) {
        if (!v.active() || v.cls != VehicleClass::CAV || !v.next_edge()) {
          continue;
        }
        auto const candidate = reroute(net, v.route, v.route_index, v.cls, {}, costs);
        if (!candidate) {
          continue;
        }
        std::span<EdgeId const> const current{v.route.begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1,
                                              v.route.end()};
        std::span<EdgeId const> const proposed{candidate->begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1,
                                               candidate->end()};
        if (route_cost(net, proposed, costs) < (1. - params.theta) * route_cost(net, current, costs)) {
          out.push_back({v.id, *candidate});
        }
      }
      return out;
    }
  }  // namespace

  Strategy parse_strategy(std::string_view tag) {
    std::string lower(tag);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "drp") {
      return Strategy::DRP;
    }
    if (lower == "prp") {
      return Strategy::PRP;
    }
    if (lower == "proposed") {
      return Strategy::Proposed;
    }
    throw std::invalid_argument{"unknown strategy '" + std::string(tag) + "' (expected drp, prp or proposed)"};
  }

  std::string_view to_string(Strategy strategy) {
    switch (strategy) {
      case Strategy::DRP:
        return "drp";
      case Strategy::PRP:
        return "prp";
      case Strategy::Proposed:
        return "proposed";
    }
    return "?";
  }

  int ControlDecision::action_for(VehicleId id) const {
    for (auto const& a : actions) {
      if (a.vehicle == id) {
        return a.direction;
      }
    }
    return 0;
  }

  bool ProtectionResult::banned(VehicleId id, SegmentRef s) const {
    return std::binary_search(bans.begin(), bans.end(), std::pair{id, s});
  }

  bool ProtectionResult::warning(SegmentRef s) const {
    return std::find(warned.begin(), warned.end(), s) != warned.end();
  }

  bool bus_warning(double busTime, double freeFlowTime, double lambda) { return busTime > (1. + lambda) * freeFlowTime; }

  bool bus_warning(SegmentRef s, PredictionSnapshot const& snapshot, double lambda) {
    return bus_warning(snapshot.bus_time(s), snapshot.network()->free_flow_time(s), lambda);
  }

  ProtectionResult protection_actions(World const& world, PredictionSnapshot const& snapshot, ControlParams const& params) {
    auto const& net = world.network();
    ProtectionResult out;
    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const s = net.segment_at(i);
      if (!net.is_dl(s) || !snapshot.has_window(s) || !bus_warning(s, snapshot, params.lambda)) {
        continue;
      }
      out.warned.push_back(s);
      for (auto const& entrant : snapshot.at(s).overlapping) {
        auto const& v = world.vehicle(entrant.vehicle);
        if (v.segment == s) {
          LaneAction a;
          a.vehicle = v.id;
          a.from = s;
          a.direction = -1;
          a.forced = true;
          a.kind = LaneChangeKind::Forced;
          out.forced.push_back(a);
        } else {
          out.bans.emplace_back(v.id, s);
        }
      }
    }
    std::sort(out.bans.begin(), out.bans.end());
    return out;
  }

  CandidateSet build_candidates(World const& world,
                                SegmentRef s,
                                PredictionSnapshot const& snapshot,
                                ProtectionResult const& protection) {
    auto const& net = world.network();
    CandidateSet out{s, {}};
    auto const target = adjacent(s);
    auto const dir = directionInto(target.lane);
    for (auto id : world.occupants(s)) {
      auto const& v = world.vehicle(id);
      if (v.cls != VehicleClass::CAV || !net.permitted_lanes(v.cls, s.edge).contains(target.lane)) {
        continue;
      }
      bool const forced = std::any_of(protection.forced.begin(), protection.forced.end(),
                                      [&](LaneAction const& a) { return a.vehicle == id; });
      if (forced || protection.banned(id, target) || (dir == +1 && snapshot.overlaps(id, target))) {
        continue;
      }
      out.members.push_back({id, dir});
    }
    std::sort(out.members.begin(), out.members.end(),
              [](Candidate const& a, Candidate const& b) { return a.vehicle < b.vehicle; });
    return out;
  }

  double u1_time_benefit(double ts, double tsAdjacent, double t0) { return (ts - tsAdjacent) / t0; }

  double u1_time_benefit(SegmentRef s, PredictionSnapshot const& snapshot) {
    return u1_time_benefit(snapshot.predicted_time(s), snapshot.predicted_time(adjacent(s)),
                           snapshot.network()->free_flow_time(s));
  }

  int u2_feasibility(NetworkModel const& net, VehicleState const& v, Lane target) {
    auto const next = v.next_edge();
    if (!next || v.segment.m == 1) {
      return 1;
    }
    return net.connects(v.current_edge(), target, *next) ? 1 : 0;
  }

  double u3_rate_penalty(std::span<double const> log, double t, double horizon, double dt) {
    auto const n = std::count_if(log.begin(), log.end(), [&](double x) { return x > t - horizon && x <= t; });
    return -static_cast<double>(n) / (horizon / dt);
  }

  double utility(double u1, double u2, double u3, ControlParams const& params) {
    return params.w1 * u1 + params.w2 * u2 + params.w3 * u3;
  }

  Selection select_winner(std::span<ScoredCandidate const> scored) {
    Selection out;
    for (auto const& c : scored) {
      if (!out.winner || c.utility > out.utility || (c.utility == out.utility && c.vehicle < *out.winner)) {
        out.winner = c.vehicle;
        out.utility = c.utility;
      }
    }
    out.fired = out.winner.has_value() && out.utility > 0.;
    return out;
  }

  ControlDecision select_lane_changes(World const& world,
                                      PredictionSnapshot const& snapshot,
                                      ProtectionResult const& protection,
                                      ControlParams const& params) {
    auto const& net = world.network();
    ControlDecision out;
    out.actions = protection.forced;
    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const s = net.segment_at(i);
      if (world.count(s) == 0) {
        continue;
      }
      auto const set = build_candidates(world, s, snapshot, protection);
      if (set.members.empty()) {
        continue;
      }
      auto const target = adjacent(s);
      auto const u1 = u1_time_benefit(s, snapshot);
      std::vector<ScoredCandidate> scored;
      std::vector<LaneAction> evaluated;
      for (auto const& c : set.members) {
        auto const& v = world.vehicle(c.vehicle);
        auto const u2 = static_cast<double>(u2_feasibility(net, v, target.lane));
        auto const u3 = u3_rate_penalty(penaltyLog(v, params), world.time(), params.rate_horizon, params.dt);
        auto const u = utility(u1, u2, u3, params);
        scored.push_back({c.vehicle, u});
        evaluated.push_back({c.vehicle, s, c.direction, false, LaneChangeKind::Utility, u, u1, u2, u3});
      }
      auto const sel = select_winner(scored);
      out.winners.push_back({s, *sel.winner, sel.utility, sel.fired});
      if (sel.fired) {
        auto const it = std::find_if(evaluated.begin(), evaluated.end(),
                                     [&](LaneAction const& a) { return a.vehicle == *sel.winner; });
        out.actions.push_back(*it);
      }
    }
    return out;
  }

  EscalationResult rerouting_escalation(World const& world,
                                        PredictionSnapshot const& snapshot,
                                        ControlParams const& params,
                                        bool gplGate) {
    auto const& net = world.network();
    auto const costs = snapshot.costs(VehicleClass::CAV);
    EscalationResult out;
    std::map<VehicleId, std::pair<Route, std::vector<EdgeId>>> assigned;

    auto avoids = [&](VehicleState const& v, Route const& route, EdgeId edge) {
      return std::find(route.begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1, route.end(), edge) ==
             route.end();
    };

    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const s = net.segment_at(i);
      if (!net.is_dl(s) || !snapshot.has_window(s) || !bus_warning(s, snapshot, params.lambda)) {
        continue;
      }
      auto const sg = adjacent(s);
      auto const t0s = net.free_flow_time(s);
      auto const t0g = net.free_flow_time(sg);
      if (gplGate && !(snapshot.predicted_time(sg) > (1. + params.gamma) * t0g)) {
        continue;
      }
      auto conflict = snapshot.at(s).overlapping;
      std::sort(conflict.begin(), conflict.end(), [&](Entrant const& a, Entrant const& b) {
        if (a.tau != b.tau) {
          return params.reroute_order == RerouteOrder::FarthestFirst ? a.tau > b.tau : a.tau < b.tau;
        }
        return a.vehicle < b.vehicle;
      });
      auto const& gplSeg = snapshot.at(sg);
      auto nOver = conflict.size();
      auto nCav = gplSeg.cav_entrants.size();
      auto const nHdv = gplSeg.hdv_entrants.size();
      auto cleared = [&] {
        bool const busOk = !bus_warning(forecast_bus_time(net, s, nOver, params.protection_horizon, params.bpr), t0s,
                                        params.lambda);
        bool const gplOk = !gplGate || forecast_time(net, sg, nCav, nHdv, params.dt, params.bpr) <= (1. + params.gamma) * t0g;
        return busOk && gplOk;
      };
      auto remove = [&](VehicleId id) {
        --nOver;
        bool const inGpl = std::any_of(gplSeg.cav_entrants.begin(), gplSeg.cav_entrants.end(),
                                       [&](Entrant const& e) { return e.vehicle == id; });
        if (inGpl && nCav > 0) {
          --nCav;
        }
      };

      bool done = cleared();
      for (auto const& entrant : conflict) {
        if (done) {
          break;
        }
        auto const& v = world.vehicle(entrant.vehicle);
        if (v.current_edge() == s.edge) {
          continue;
        }
        auto found = assigned.find(v.id);
        if (found != assigned.end() && avoids(v, found->second.first, s.edge)) {
          remove(v.id);
          done = cleared();
          continue;
        }
        std::vector<EdgeId> forbidden{s.edge};
        if (found != assigned.end()) {
          forbidden.insert(forbidden.end(), found->second.second.begin(), found->second.second.end());
        }
        auto route = reroute(net, v.route, v.route_index, v.cls, forbidden, costs);
        if (!route) {
          out.unroutable.push_back(v.id);
          continue;
        }
        assigned[v.id] = {std::move(*route), std::move(forbidden)};
        remove(v.id);
        done = cleared();
      }
      if (!done) {
        out.unresolved.push_back(s);
      }
    }
    for (auto& [id, entry] : assigned) {
      out.assignments.push_back({id, std::move(entry.first)});
    }
    std::sort(out.unroutable.begin(), out.unroutable.end());
    out.unroutable.erase(std::unique(out.unroutable.begin(), out.unroutable.end()), out.unroutable.end());
    return out;
  }

  CostView instantaneous_costs(World const& world, VehicleClass cls) {
    auto const& net = world.network();
    std::vector<double> out;
    out.reserve(net.edges().size());
    for (auto const& e : net.edges()) {
      auto const lanes = net.permitted_lanes(cls, e.id);
      double total = 0.;
      for (std::uint8_t m : {1, 2}) {
        double best = std::numeric_limits<double>::infinity();
        for (auto lane : {Lane::Left, Lane::Right}) {
          if (lanes.contains(lane)) {
            best = std::min(best, e.segment_length() / world.segment_speed({e.id, lane, m}));
          }
        }
        total += std::isfinite(best) ? best : e.free_flow_time();
      }
      out.push_back(total);
    }
    return CostView{std::move(out)};
  }

  ControlDecision strategy_step(Strategy strategy,
                                World const& world,
                                PredictionSnapshot const& snapshot,
                                ProtectionResult const& protection,
                                ControlParams const& params) {
    ControlDecision out;
    switch (strategy) {
      case Strategy::DRP:
        out.reroutes = dynamicReroutes(world, params);
        out.actions = myopicMoves(world, nullptr);
        break;
      case Strategy::PRP: {
        auto esc = rerouting_escalation(world, snapshot, params, false);
        out.reroutes = std::move(esc.assignments);
        out.unresolved = std::move(esc.unresolved);
        out.unroutable = std::move(esc.unroutable);
        out.actions = protection.forced;
        auto moves = myopicMoves(world, &protection);
        out.actions.insert(out.actions.end(), moves.begin(), moves.end());
        break;
      }
      case Strategy::Proposed: {
        out = select_lane_changes(world, snapshot, protection, params);
        auto esc = rerouting_escalation(world, snapshot, params, true);
        out.reroutes = std::move(esc.assignments);
        out.unresolved = std::move(esc.unresolved);
        out.unroutable = std::move(esc.unroutable);
        break;
      }
    }
    return out;
  }

  Lane MyopicEntryPolicy::choose_entry_lane(World const& world,
                                            VehicleState const&,
                                            EdgeId edge,
                                            std::optional<EdgeId> following,
                                            LaneSet candidates) const {
    return pickEntryLane(
        world, edge, following, candidates, [&](Lane l) { return world.segment_speed({edge, l, 1}); }, false);
  }

  Lane PredictiveEntryPolicy::choose_entry_lane(World const& world,
                                                VehicleState const&,
                                                EdgeId edge,
                                                std::optional<EdgeId> following,
                                                LaneSet candidates) const {
    if (m_snapshot == nullptr || m_snapshot->network() != &world.network()) {
      return FewestVehiclesPolicy{}.choose_entry_lane(world, VehicleState{}, edge, following, candidates);
    }
    return pickEntryLane(
        world, edge, following, candidates, [&](Lane l) { return -m_snapshot->predicted_time({edge, l, 1}); }, true);
  }

}  // namespace dlsim
