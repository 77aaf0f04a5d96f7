#include "dlsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dlsim {

  namespace {
    constexpr double kEps = 1e-9;

    std::uint64_t splitmix64(std::uint64_t x) {
      x += 0x9e3779b97f4a7c15ULL;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      return x ^ (x >> 31);
    }

    // Uniform in [0, 1) from the top 53 bits; identical on every platform.
    double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

    std::size_t classIndex(VehicleClass c) { return static_cast<std::size_t>(c); }
  }  // namespace

  std::string_view to_string(LaneChangeKind kind) {
    switch (kind) {
      case LaneChangeKind::Utility:
        return "utility";
      case LaneChangeKind::Forced:
        return "forced";
      case LaneChangeKind::Myopic:
        return "myopic";
      case LaneChangeKind::Mandatory:
        return "mandatory";
    }
    return "?";
  }

  std::string_view to_string(EngineEvent::Type type) {
    switch (type) {
      case EngineEvent::Type::Inject:
        return "inject";
      case EngineEvent::Type::Transfer:
        return "transfer";
      case EngineEvent::Type::LaneChange:
        return "lane_change";
      case EngineEvent::Type::StopArrival:
        return "stop_arrival";
      case EngineEvent::Type::Retire:
        return "retire";
    }
    return "?";
  }

  Lane FewestVehiclesPolicy::choose_entry_lane(World const& world,
                                               VehicleState const&,
                                               EdgeId edge,
                                               std::optional<EdgeId> following,
                                               LaneSet candidates) const {
    auto const& net = world.network();
    LaneSet pool = candidates;
    if (following) {
      LaneSet onward;
      for (auto lane : {Lane::Left, Lane::Right}) {
        if (candidates.contains(lane) && net.connects(edge, lane, *following)) {
          onward.insert(lane);
        }
      }
      if (!onward.empty()) {
        pool = onward;
      }
    }
    std::optional<Lane> best;
    int bestCount = std::numeric_limits<int>::max();
    for (auto lane : {Lane::Left, Lane::Right}) {
      if (!pool.contains(lane)) {
        continue;
      }
      auto const n = world.count({edge, lane, 1});
      if (n < bestCount) {
        best = lane;
        bestCount = n;
      }
    }
    return best.value_or(Lane::Left);
  }

  World::World(Scenario const& scenario, ControlParams params, std::uint64_t seed)
      : m_scenario{std::make_shared<Scenario const>(scenario)},
        m_params{params},
        m_lanePolicy{std::make_shared<FewestVehiclesPolicy>()} {
    m_params.validate();
    auto const& net = network();
    m_occupants.resize(net.segment_count());
    m_freeFlow = CostView::free_flow(net);
    m_routingCosts = m_freeFlow;

    auto const horizon = m_scenario->horizon;
    auto const& entries = m_scenario->demand.entries;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      auto const& d = entries[k];
      if (d.process == DemandEntry::Process::Deterministic) {
        for (auto t : d.times) {
          if (t < horizon) {
            m_departures.push_back({t, d.cls, d.origin, d.destination});
          }
        }
        continue;
      }
      if (d.rate <= 0.) {
        continue;
      }
      std::mt19937_64 rng{splitmix64(seed ^ splitmix64(d.seed + 0x51ed27ULL * (k + 1)))};
      auto const stop = std::min(d.end, horizon);
      double t = d.start;
      while (true) {
        t += -std::log1p(-unit(rng)) / d.rate;
        if (t >= stop) {
          break;
        }
        m_departures.push_back({t, d.cls, d.origin, d.destination});
      }
    }
    std::stable_sort(m_departures.begin(), m_departures.end(),
                     [](Departure const& a, Departure const& b) { return a.time < b.time; });

    for (auto const& line : m_scenario->bus_lines) {
      for (std::size_t trip = 0; trip < line.departures.size(); ++trip) {
        if (line.departures[trip] < horizon) {
          m_busDepartures.push_back({line.departures[trip], line.id, trip});
        }
      }
    }
    std::stable_sort(m_busDepartures.begin(), m_busDepartures.end(),
                     [](BusDeparture const& a, BusDeparture const& b) { return a.time < b.time; });
  }

  double World::segment_speed_for(int count, int jam, double freeFlowSpeed) const {
    auto const ratio = 1. - static_cast<double>(count) / static_cast<double>(jam);
    return freeFlowSpeed * std::clamp(ratio, m_params.speed_floor, 1.);
  }

  double World::segment_speed(SegmentRef s, int extra) const {
    auto const& net = network();
    return segment_speed_for(count(s) + extra, net.jam_count(s), net.edge(s.edge).free_flow_speed);
  }

  std::size_t World::active_count() const {
    return static_cast<std::size_t>(
        std::count_if(m_vehicles.begin(), m_vehicles.end(), [](VehicleState const& v) { return v.active(); }));
  }

  bool World::drained() const {
    return m_nextDeparture == m_departures.size() && m_nextBus == m_busDepartures.size() && m_pending.empty() &&
           active_count() == 0;
  }

  bool World::conserved() const {
    std::array<std::size_t, 3> inNetwork{};
    for (auto const& v : m_vehicles) {
      if (v.status != VehicleStatus::Retired) {
        ++inNetwork[classIndex(v.cls)];
      }
    }
    for (std::size_t c = 0; c < 3; ++c) {
      if (m_counts.injected[c] != m_counts.retired[c] + inNetwork[c]) {
        return false;
      }
    }
    return true;
  }

  int World::max_overfill() const {
    int worst = std::numeric_limits<int>::min();
    auto const& net = network();
    for (std::size_t i = 0; i < m_occupants.size(); ++i) {
      worst = std::max(worst, static_cast<int>(m_occupants[i].size()) - net.jam_count(net.segment_at(i)));
    }
    return worst;
  }

  void World::log(EngineEvent::Type type, VehicleState const& v) {
    if (m_logEvents) {
      m_events.push_back({time(), type, v.id, v.cls, v.segment, v.position});
    }
  }

  bool World::gate_open(EdgeId edge, double atTime) const {
    return std::all_of(m_scenario->gates.begin(), m_scenario->gates.end(),
                       [&](SignalGate const& g) { return g.approach != edge || g.green(atTime); });
  }

  LaneSet World::entry_candidates(VehicleState const& v, EdgeId edge, std::optional<EdgeId> following) const {
    auto const& net = network();
    auto lanes = net.permitted_lanes(v.cls, edge);
    if (v.cls == VehicleClass::HDV && following) {
      // Human drivers do not change lanes: pick one that already leads onward.
      LaneSet onward;
      for (auto lane : {Lane::Left, Lane::Right}) {
        if (lanes.contains(lane) && net.connects(edge, lane, *following)) {
          onward.insert(lane);
        }
      }
      if (!onward.empty()) {
        lanes = onward;
      }
    }
    LaneSet result;
    for (auto lane : {Lane::Left, Lane::Right}) {
      if (!lanes.contains(lane)) {
        continue;
      }
      SegmentRef s{edge, lane, 1};
      if (count(s) >= net.jam_count(s)) {
        continue;
      }
      if (m_entryGuard && m_entryGuard(v, s)) {
        continue;
      }
      result.insert(lane);
    }
    return result;
  }

  void World::insert_sorted(std::vector<VehicleId>& queue, VehicleId id) {
    auto const pos = vehicle(id).position;
    auto it = std::find_if(queue.begin(), queue.end(), [&](VehicleId other) { return vehicle(other).position < pos; });
    queue.insert(it, id);
  }

  bool World::try_enter_network(VehicleId id) {
    auto& v = mut(id);
    auto const edge = v.route.front();
    auto const following = v.route.size() > 1 ? std::optional{v.route[1]} : std::nullopt;
    auto const candidates = entry_candidates(v, edge, following);
    if (candidates.empty()) {
      return false;
    }
    Lane lane = Lane::Right;
    if (v.cls != VehicleClass::Bus) {
      lane = m_lanePolicy->choose_entry_lane(*this, v, edge, following, candidates);
    }
    v.segment = {edge, lane, 1};
    v.position = 0.;
    v.speed = 0.;
    v.status = VehicleStatus::Active;
    occ(v.segment).push_back(id);
    log(EngineEvent::Type::Inject, v);
    if (v.cls == VehicleClass::CAV && network().is_dl(v.segment) && m_dlEntryObserver) {
      m_dlEntryObserver(v, SegmentRef{}, v.segment);
    }
    return true;
  }

  std::vector<VehicleId> World::inject_demand() {
    auto const t = time();
    auto const& net = network();
    std::vector<VehicleId> created;
    while (m_nextDeparture < m_departures.size() && m_departures[m_nextDeparture].time <= t + kEps) {
      auto const& d = m_departures[m_nextDeparture++];
      auto const& costs = d.cls == VehicleClass::CAV ? m_routingCosts : m_freeFlow;
      auto route = initial_route(net, d.origin, d.destination, d.cls, costs);
      if (!route) {
        // Routability is checked at load time under free-flow costs; fall back to those.
        route = initial_route(net, d.origin, d.destination, d.cls, m_freeFlow);
      }
      if (!route) {
        throw std::logic_error{"demand pair became unroutable"};
      }
      VehicleState v;
      v.id = VehicleId{static_cast<std::uint32_t>(m_vehicles.size())};
      v.cls = d.cls;
      v.route = std::move(*route);
      v.depart_time = t;
      m_vehicles.push_back(std::move(v));
      ++m_counts.injected[classIndex(d.cls)];
      m_pending.push_back(m_vehicles.back().id);
      created.push_back(m_vehicles.back().id);
    }
    std::erase_if(m_pending, [&](VehicleId id) { return try_enter_network(id); });
    return created;
  }

  void World::bus_service() {
    auto const t = time();
    for (auto& v : m_vehicles) {
      if (!v.active() || !v.bus || !v.bus->dwelling) {
        continue;
      }
      if (t + kEps >= v.bus->dwell_until) {
        v.bus->dwelling = false;
        m_stopArrivals[v.bus->record].departure = t;
        ++v.bus->next_stop;
      }
    }
    while (m_nextBus < m_busDepartures.size() && m_busDepartures[m_nextBus].time <= t + kEps) {
      auto const& dep = m_busDepartures[m_nextBus++];
      auto const& line = m_scenario->bus_line(dep.line);
      VehicleState v;
      v.id = VehicleId{static_cast<std::uint32_t>(m_vehicles.size())};
      v.cls = VehicleClass::Bus;
      v.route = line.route;
      v.depart_time = t;
      v.bus = BusProgress{dep.line, dep.trip};
      m_vehicles.push_back(std::move(v));
      ++m_counts.injected[classIndex(VehicleClass::Bus)];
      auto const id = m_vehicles.back().id;
      if (!try_enter_network(id)) {
        m_pending.push_back(id);
      }
    }
  }

  void World::maybe_arrive_at_stop(VehicleState& v, double atTime) {
    if (!v.bus || v.bus->dwelling) {
      return;
    }
    auto const& line = m_scenario->bus_line(v.bus->line);
    if (v.bus->next_stop >= line.stops.size()) {
      return;
    }
    auto const& stop = network().stop(line.stops[v.bus->next_stop].stop);
    if (v.segment != stop.segment || v.position + kEps < stop.offset) {
      return;
    }
    v.position = stop.offset;
    auto const scheduled = line.scheduled_arrival(v.bus->trip, v.bus->next_stop);
    v.bus->dwelling = true;
    v.bus->dwell_until = std::max(atTime + line.dwell, scheduled + line.dwell);
    v.bus->record = m_stopArrivals.size();
    m_stopArrivals.push_back({v.bus->line, v.bus->trip, stop.id, v.id, scheduled, atTime, -1.});
    log(EngineEvent::Type::StopArrival, v);
  }

  void World::retire(VehicleState& v, double atTime) {
    v.status = VehicleStatus::Retired;
    v.arrival_time = atTime;
    v.speed = 0.;
    ++m_counts.retired[classIndex(v.cls)];
    log(EngineEvent::Type::Retire, v);
  }

  void World::record_lane_change(VehicleState& v, SegmentRef from, SegmentRef to, int direction, LaneChangeKind kind) {
    auto const t = time();
    v.lane_change_log.push_back(t);
    v.lane_change_kinds.push_back(kind);
    m_laneChanges.push_back({t, v.id, from, to, direction, kind});
    log(EngineEvent::Type::LaneChange, v);
  }

  bool World::try_cross_node(VehicleState& v, double overshoot) {
    auto const& net = network();
    auto const tEnd = time() + m_params.dt_sim;
    auto const current = v.current_edge();
    auto next = v.next_edge();
    if (!next) {
      retire(v, tEnd);
      return true;
    }
    if (!net.connects(current, v.segment.lane, *next)) {
      if (v.cls == VehicleClass::CAV) {
        // Missed turn: continue from the lane the vehicle is in.
        RouteQuery query;
        query.destination = net.edge(v.route.back()).to;
        query.cls = v.cls;
        query.start_edge = current;
        query.start_lane = v.segment.lane;
        if (auto tail = shortest_path(net, query, m_routingCosts)) {
          Route updated(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1);
          updated.insert(updated.end(), tail->begin(), tail->end());
          v.route = std::move(updated);
          ++v.reroute_count;
          next = v.next_edge();
          if (!next) {
            retire(v, tEnd);
            return true;
          }
        }
      }
      if (!net.connects(current, v.segment.lane, *next)) {
        auto const target = adjacent(v.segment);
        bool const permitted = net.permitted_lanes(v.cls, current).contains(target.lane);
        if (permitted && count(target) < net.jam_count(target) && !(m_entryGuard && m_entryGuard(v, target))) {
          auto const from = v.segment;
          std::erase(occ(from), v.id);
          v.segment = target;
          v.position = net.segment_end(target);
          insert_sorted(occ(target), v.id);
          record_lane_change(v, from, target, target.lane == Lane::Right ? 1 : -1, LaneChangeKind::Mandatory);
          if (v.cls == VehicleClass::CAV && net.is_dl(target) && m_dlEntryObserver) {
            m_dlEntryObserver(v, from, target);
          }
        }
        return false;
      }
    }
    auto const following =
        v.route_index + 2 < v.route.size() ? std::optional{v.route[v.route_index + 2]} : std::nullopt;
    auto const candidates = entry_candidates(v, *next, following);
    if (candidates.empty()) {
      return false;
    }
    Lane lane = Lane::Right;
    if (v.cls != VehicleClass::Bus) {
      lane = m_lanePolicy->choose_entry_lane(*this, v, *next, following, candidates);
    }
    SegmentRef const target{*next, lane, 1};
    auto& queue = occ(target);
    auto newPos = std::min(overshoot, net.edge(*next).segment_length());
    if (!queue.empty()) {
      newPos = std::min(newPos, vehicle(queue.back()).position);
    }
    newPos = std::max(newPos, 0.);
    auto const previous = v.segment;
    std::erase(occ(v.segment), v.id);
    ++v.route_index;
    v.segment = target;
    v.position = newPos;
    queue.push_back(v.id);
    log(EngineEvent::Type::Transfer, v);
    if (v.cls == VehicleClass::CAV && net.is_dl(target) && m_dlEntryObserver) {
      m_dlEntryObserver(v, previous, target);
    }
    return true;
  }

  void World::step() {
    auto const& net = network();
    auto const dt = m_params.dt_sim;
    auto const tEnd = time() + dt;

    std::vector<double> speeds(m_occupants.size());
    for (std::size_t i = 0; i < m_occupants.size(); ++i) {
      auto const s = net.segment_at(i);
      speeds[i] = segment_speed_for(static_cast<int>(m_occupants[i].size()), net.jam_count(s),
                                    net.edge(s.edge).free_flow_speed);
    }

    std::vector<char> moved(m_vehicles.size(), 0);
    static constexpr std::array<std::pair<Lane, std::uint8_t>, 4> kOrder{
        {{Lane::Left, 2}, {Lane::Right, 2}, {Lane::Left, 1}, {Lane::Right, 1}}};

    for (auto const& edge : net.edges()) {
      for (auto [lane, m] : kOrder) {
        SegmentRef const seg{edge.id, lane, m};
        auto const si = net.segment_index(seg);
        auto const snapshot = m_occupants[si];
        double cap = std::numeric_limits<double>::infinity();
        for (auto id : snapshot) {
          auto& v = mut(id);
          if (moved[id.value]) {
            cap = v.position;
            continue;
          }
          moved[id.value] = 1;
          auto const startEdge = v.route_index;
          auto const startPos = v.position;
          if (v.bus && v.bus->dwelling) {
            v.speed = 0.;
            cap = v.position;
            continue;
          }
          double target = std::max(v.position, std::min(v.position + speeds[si] * dt, cap));

          BusStop const* stop = nullptr;
          if (v.bus) {
            auto const& line = m_scenario->bus_line(v.bus->line);
            if (v.bus->next_stop < line.stops.size()) {
              auto const& candidate = net.stop(line.stops[v.bus->next_stop].stop);
              if (candidate.edge == edge.id && candidate.offset + kEps >= v.position) {
                stop = &candidate;
                target = std::min(target, candidate.offset);
              }
            }
          }

          bool left = false;
          auto const segEnd = net.segment_end(seg);
          bool const atStop = stop != nullptr && stop->segment == seg && target + kEps >= stop->offset;
          if (!atStop && target + kEps >= segEnd) {
            if (m == 1) {
              SegmentRef const next{edge.id, lane, 2};
              auto& queue = occ(next);
              if (static_cast<int>(queue.size()) < net.jam_count(next)) {
                auto newPos = std::min(target, edge.length);
                if (!queue.empty()) {
                  newPos = std::min(newPos, vehicle(queue.back()).position);
                }
                std::erase(m_occupants[si], id);
                v.segment = next;
                v.position = std::max(newPos, segEnd);
                queue.push_back(id);
                log(EngineEvent::Type::Transfer, v);
                left = true;
              } else {
                target = segEnd;
              }
            } else if (gate_open(edge.id, tEnd) && try_cross_node(v, target - segEnd)) {
              if (!v.active()) {
                std::erase(m_occupants[si], id);
              }
              left = true;
            } else {
              target = segEnd;
            }
          }

          if (!left) {
            v.position = target;
            cap = v.position;
          }
          if (v.active()) {
            double const travelled = v.route_index == startEdge
                                         ? v.position - startPos
                                         : (net.edge(v.route[startEdge]).length - startPos) + v.position;
            v.speed = std::min(travelled / dt, net.edge(v.current_edge()).free_flow_speed);
            maybe_arrive_at_stop(v, tEnd);
            if (!left) {
              cap = v.position;
            }
          }
        }
      }
    }
    ++m_tick;
  }

  bool World::execute_lane_change(VehicleId id, int direction, LaneChangeKind kind) {
    auto& v = mut(id);
    if (v.cls != VehicleClass::CAV) {
      throw std::invalid_argument{"only CAVs accept lane-change commands"};
    }
    if (!v.active()) {
      throw std::invalid_argument{"vehicle is not in the network"};
    }
    if (direction != 1 && direction != -1) {
      throw std::invalid_argument{"lane-change direction must be -1 or +1"};
    }
    auto const from = v.segment;
    if ((direction == 1 && from.lane == Lane::Right) || (direction == -1 && from.lane == Lane::Left)) {
      throw std::invalid_argument{"vehicle is already in the target lane"};
    }
    auto const& net = network();
    auto const to = adjacent(from);
    if (count(to) >= net.jam_count(to)) {
      return false;
    }
    if (m_entryGuard && m_entryGuard(v, to)) {
      return false;
    }
    std::erase(occ(from), id);
    v.segment = to;
    insert_sorted(occ(to), id);
    record_lane_change(v, from, to, direction, kind);
    if (net.is_dl(to) && m_dlEntryObserver) {
      m_dlEntryObserver(v, from, to);
    }
    return true;
  }

  void World::apply_route(VehicleId id, Route route) {
    auto& v = mut(id);
    if (route.size() <= v.route_index ||
        !std::equal(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(v.route_index) + 1, route.begin())) {
      throw std::invalid_argument{"new route must keep the traversed prefix and current edge"};
    }
    v.route = std::move(route);
    ++v.reroute_count;
  }

}  // namespace dlsim
