#include "dlsim/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dlsim {

  namespace {
    std::optional<std::size_t> findAhead(VehicleState const& v, EdgeId edge) {
      for (std::size_t j = v.route_index; j < v.route.size(); ++j) {
        if (v.route[j] == edge) {
          return j;
        }
      }
      return std::nullopt;
    }

    Lane plannedLane(NetworkModel const& net, VehicleState const& v, EdgeId edge) {
      if (v.cls == VehicleClass::Bus) {
        return Lane::Right;
      }
      auto const lanes = net.permitted_lanes(v.cls, edge);
      return lanes.contains(v.segment.lane) ? v.segment.lane : Lane::Left;
    }

    /// Distance from the vehicle to edge-relative `offset` on route[j], j > route_index.
    double distanceAhead(NetworkModel const& net, VehicleState const& v, std::size_t j, double offset) {
      double d = net.edge(v.current_edge()).length - v.position;
      for (std::size_t l = v.route_index + 1; l < j; ++l) {
        d += net.edge(v.route[l]).length;
      }
      return d + offset;
    }

    /// Longitudinal distance to the entrance of s; 0 when already level with it.
    std::optional<double> distanceTo(NetworkModel const& net, VehicleState const& v, SegmentRef s, bool laneAware) {
      if (!v.active()) {
        return std::nullopt;
      }
      auto const j = findAhead(v, s.edge);
      if (!j) {
        return std::nullopt;
      }
      if (*j == v.route_index) {
        if (laneAware && s.lane != v.segment.lane) {
          return std::nullopt;
        }
        if (s.m < v.segment.m) {
          return std::nullopt;
        }
        if (s.m == v.segment.m) {
          if (laneAware) {
            return std::nullopt;  // already entered
          }
          return 0.;
        }
        return std::max(0., net.segment_start(s) - v.position);
      }
      if (laneAware && s.lane != plannedLane(net, v, s.edge)) {
        return std::nullopt;
      }
      return distanceAhead(net, v, *j, net.segment_start(s));
    }

    double stationaryOr(double speed, double vMin) { return std::max(speed, vMin); }
  }  // namespace

  std::optional<double> entry_time(NetworkModel const& net, VehicleState const& v, SegmentRef s, double vMin) {
    auto const d = distanceTo(net, v, s, true);
    if (!d) {
      return std::nullopt;
    }
    return *d / stationaryOr(v.speed, vMin);
  }

  std::optional<double> reach_time(NetworkModel const& net, VehicleState const& v, SegmentRef s, double vMin) {
    auto const d = distanceTo(net, v, s, false);
    if (!d) {
      return std::nullopt;
    }
    return *d / stationaryOr(v.speed, vMin);
  }

  int entry_indicator(std::optional<double> tau, double dt) {
    return tau && *tau >= 0. && *tau < dt ? 1 : 0;
  }

  double bpr_time(double t0, double flow, double capacity, BprParams const& params) {
    if (!(t0 > 0.)) {
      throw std::invalid_argument{"BPR free-flow time must be > 0"};
    }
    if (!(capacity > 0.)) {
      throw std::invalid_argument{"BPR capacity must be > 0"};
    }
    if (!(flow >= 0.)) {
      throw std::invalid_argument{"BPR flow must be >= 0"};
    }
    return t0 * (1. + params.alpha * std::pow(flow / capacity, params.beta));
  }

  Interval protection_window(double eta, double horizon) {
    if (!(horizon > 0.)) {
      throw std::invalid_argument{"protection horizon must be > 0"};
    }
    if (!(eta >= 0.)) {
      throw std::invalid_argument{"bus ETA must be >= 0"};
    }
    return {std::max(0., eta - horizon), eta + horizon};
  }

  double conflict_inflow(std::size_t overlapping, double horizon) {
    return static_cast<double>(overlapping) / (2. * horizon);
  }

  std::optional<double> bus_eta(World const& world, VehicleState const& bus, SegmentRef s) {
    auto const& net = world.network();
    if (!bus.bus || !bus.active()) {
      return std::nullopt;
    }
    auto const j = findAhead(bus, s.edge);
    if (!j || s.lane != Lane::Right) {
      return std::nullopt;
    }
    auto const& progress = *bus.bus;
    auto const& line = world.scenario().bus_line(progress.line);
    auto const vMin = world.params().v_min;

    // Travel part.
    double travel = 0.;
    bool const stationary = progress.dwelling || bus.speed < vMin;
    if (*j == bus.route_index) {
      if (s.m < bus.segment.m) {
        return std::nullopt;
      }
      if (s.m == bus.segment.m) {
        return 0.;
      }
      auto const d = std::max(0., net.segment_start(s) - bus.position);
      travel = stationary ? d / net.edge(s.edge).free_flow_speed : d / std::max(bus.speed, vMin);
    } else if (stationary) {
      auto const& cur = net.edge(bus.current_edge());
      travel = (cur.length - bus.position) / cur.free_flow_speed;
      for (std::size_t l = bus.route_index + 1; l < *j; ++l) {
        auto const& e = net.edge(bus.route[l]);
        travel += e.length / e.free_flow_speed;
      }
      travel += net.segment_start(s) / net.edge(s.edge).free_flow_speed;
    } else {
      travel = distanceAhead(net, bus, *j, net.segment_start(s)) / std::max(bus.speed, vMin);
    }

    // Dwell part.
    double dwell = 0.;
    if (progress.dwelling) {
      dwell += std::max(0., progress.dwell_until - world.time());
    }
    auto routePos = [&](std::size_t routeIdx, double offset) {
      double pos = offset;
      for (std::size_t l = 0; l < routeIdx; ++l) {
        pos += net.edge(bus.route[l]).length;
      }
      return pos;
    };
    auto const entrance = routePos(*j, net.segment_start(s));
    auto const here = routePos(bus.route_index, bus.position);
    for (std::size_t k = progress.next_stop + (progress.dwelling ? 1 : 0); k < line.stops.size(); ++k) {
      auto const& stop = net.stop(line.stops[k].stop);
      auto const idx = findAhead(bus, stop.edge);
      if (!idx) {
        continue;
      }
      auto const pos = routePos(*idx, stop.offset);
      if (pos >= here && pos < entrance) {
        dwell += line.dwell;
      }
    }
    return travel + dwell;
  }

  double forecast_time(NetworkModel const& net,
                       SegmentRef s,
                       std::size_t cavEntrants,
                       std::size_t hdvEntrants,
                       double dt,
                       BprParams const& bpr) {
    auto const entrants = net.is_dl(s) ? cavEntrants : cavEntrants + hdvEntrants;
    auto const flow = static_cast<double>(entrants) / dt;
    return bpr_time(net.free_flow_time(s), flow, net.capacity(s), bpr);
  }

  double forecast_bus_time(NetworkModel const& net,
                           SegmentRef s,
                           std::size_t overlapping,
                           double horizon,
                           BprParams const& bpr) {
    return bpr_time(net.free_flow_time(s), conflict_inflow(overlapping, horizon), net.capacity(s), bpr);
  }

  PredictionSnapshot PredictionSnapshot::build(World const& world) {
    PredictionSnapshot snap;
    snap.refresh_flow(world);
    snap.refresh_bus(world);
    return snap;
  }

  void PredictionSnapshot::refresh_flow(World const& world) {
    auto const& net = world.network();
    auto const& params = world.params();
    if (m_net != &net || m_segments.size() != net.segment_count()) {
      m_net = &net;
      m_segments.assign(net.segment_count(), {});
    }
    m_dt = params.dt;
    m_horizon = params.protection_horizon;
    m_flowTime = world.time();
    for (auto& seg : m_segments) {
      seg.cav_entrants.clear();
      seg.hdv_entrants.clear();
    }

    for (auto const& v : world.vehicles()) {
      if (!v.active() || v.cls == VehicleClass::Bus) {
        continue;
      }
      auto const speed = std::max(v.speed, params.v_min);
      auto record = [&](SegmentRef s, double distance) {
        auto const tau = distance / speed;
        if (entry_indicator(tau, m_dt) == 1) {
          auto& seg = m_segments[net.segment_index(s)];
          (v.cls == VehicleClass::CAV ? seg.cav_entrants : seg.hdv_entrants).push_back({v.id, tau});
        }
        return tau < m_dt;
      };
      auto const& cur = net.edge(v.current_edge());
      if (v.segment.m == 1 && !record({cur.id, v.segment.lane, 2}, std::max(0., cur.segment_length() - v.position))) {
        continue;
      }
      double ahead = cur.length - v.position;
      for (std::size_t j = v.route_index + 1; j < v.route.size(); ++j) {
        auto const& e = net.edge(v.route[j]);
        auto const lane = plannedLane(net, v, e.id);
        if (!record({e.id, lane, 1}, ahead) || !record({e.id, lane, 2}, ahead + e.segment_length())) {
          break;
        }
        ahead += e.length;
      }
    }

    for (std::size_t i = 0; i < m_segments.size(); ++i) {
      auto const s = net.segment_at(i);
      auto& seg = m_segments[i];
      auto const entrants = net.is_dl(s) ? seg.cav_entrants.size() : seg.cav_entrants.size() + seg.hdv_entrants.size();
      seg.inflow = static_cast<double>(entrants) / m_dt;
      seg.predicted_time = bpr_time(net.free_flow_time(s), seg.inflow, net.capacity(s), params.bpr);
    }
  }

  void PredictionSnapshot::refresh_bus(World const& world) {
    auto const& net = world.network();
    auto const& params = world.params();
    if (m_net != &net || m_segments.size() != net.segment_count()) {
      m_net = &net;
      m_segments.assign(net.segment_count(), {});
    }
    m_dt = params.dt;
    m_horizon = params.protection_horizon;
    m_busTime = world.time();
    for (auto& seg : m_segments) {
      seg.windows.clear();
      seg.overlapping.clear();
    }

    std::vector<std::size_t> protectedSegments;
    for (auto const& bus : world.vehicles()) {
      if (!bus.active() || !bus.bus) {
        continue;
      }
      for (std::size_t j = bus.route_index; j < bus.route.size(); ++j) {
        for (std::uint8_t m : {1, 2}) {
          SegmentRef const s{bus.route[j], Lane::Right, m};
          auto const eta = bus_eta(world, bus, s);
          if (!eta) {
            continue;
          }
          auto const idx = net.segment_index(s);
          if (m_segments[idx].windows.empty()) {
            protectedSegments.push_back(idx);
          }
          m_segments[idx].windows.push_back({bus.id, *eta, protection_window(*eta, m_horizon)});
        }
      }
    }

    for (auto const& v : world.vehicles()) {
      if (!v.active() || v.cls != VehicleClass::CAV) {
        continue;
      }
      for (auto idx : protectedSegments) {
        auto const s = net.segment_at(idx);
        auto const tau = reach_time(net, v, s, params.v_min);
        if (!tau) {
          continue;
        }
        auto& seg = m_segments[idx];
        bool const hit = std::any_of(seg.windows.begin(), seg.windows.end(),
                                     [&](BusWindow const& w) { return w.window.contains(*tau); });
        if (hit) {
          seg.overlapping.push_back({v.id, *tau});
        }
      }
    }

    for (std::size_t i = 0; i < m_segments.size(); ++i) {
      auto const s = net.segment_at(i);
      auto& seg = m_segments[i];
      seg.conflict_inflow = conflict_inflow(seg.overlapping.size(), m_horizon);
      seg.bus_time = net.is_dl(s) ? bpr_time(net.free_flow_time(s), seg.conflict_inflow, net.capacity(s), params.bpr)
                                  : net.free_flow_time(s);
    }
  }

  double PredictionSnapshot::dl_inflow(SegmentRef s) const {
    if (!m_net->is_dl(s)) {
      throw std::invalid_argument{"dl_inflow called on a general-purpose segment"};
    }
    return at(s).inflow;
  }

  double PredictionSnapshot::gpl_inflow(SegmentRef s) const {
    if (m_net->is_dl(s)) {
      throw std::invalid_argument{"gpl_inflow called on a dedicated-lane segment"};
    }
    return at(s).inflow;
  }

  bool PredictionSnapshot::overlaps(VehicleId cav, SegmentRef s) const {
    auto const& list = at(s).overlapping;
    return std::any_of(list.begin(), list.end(), [&](Entrant const& e) { return e.vehicle == cav; });
  }

  CostView PredictionSnapshot::costs(VehicleClass cls) const {
    std::vector<double> out;
    out.reserve(m_net->edges().size());
    for (auto const& e : m_net->edges()) {
      auto const lanes = m_net->permitted_lanes(cls, e.id);
      double total = 0.;
      for (std::uint8_t m : {1, 2}) {
        double best = std::numeric_limits<double>::infinity();
        for (auto lane : {Lane::Left, Lane::Right}) {
          if (lanes.contains(lane)) {
            best = std::min(best, predicted_time({e.id, lane, m}));
          }
        }
        total += std::isfinite(best) ? best : e.free_flow_time();
      }
      out.push_back(total);
    }
    return CostView{std::move(out)};
  }

}  // namespace dlsim
