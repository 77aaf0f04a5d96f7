#pragma once

#include "dlsim/ids.hpp"
#include "dlsim/network.hpp"
#include "dlsim/params.hpp"
#include "dlsim/routing.hpp"
#include "dlsim/scenario.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dlsim {

  enum class LaneChangeKind : std::uint8_t {
    Utility,    // selected by the utility controller
    Forced,     // bus-protection exit
    Myopic,     // speed-seeking baseline behavior
    Mandatory,  // engine realignment to reach the next route edge
  };

  std::string_view to_string(LaneChangeKind kind);

  struct LaneChangeRecord {
    double time{0.};
    VehicleId vehicle;
    SegmentRef from;
    SegmentRef to;
    int direction{0};
    LaneChangeKind kind{LaneChangeKind::Utility};
  };

  struct StopArrivalRecord {
    BusLineId line;
    std::size_t trip{0};
    StopId stop;
    VehicleId bus;
    double scheduled{0.};
    double actual{0.};
    double departure{-1.};
  };

  /// Bus-specific progress through its timetable.
  struct BusProgress {
    BusLineId line;
    std::size_t trip{0};
    std::size_t next_stop{0};
    bool dwelling{false};
    double dwell_until{0.};
    std::size_t record{0};  // index into World::stop_arrivals() while dwelling
  };

  enum class VehicleStatus : std::uint8_t { Pending, Active, Retired };

  struct VehicleState {
    VehicleId id;
    VehicleClass cls{VehicleClass::HDV};
    VehicleStatus status{VehicleStatus::Pending};
    Route route;
    std::size_t route_index{0};
    SegmentRef segment;
    /// Edge-relative position, meters from the edge start.
    double position{0.};
    double speed{0.};
    double depart_time{0.};
    std::optional<double> arrival_time;
    std::vector<double> lane_change_log;
    std::vector<LaneChangeKind> lane_change_kinds;  // parallel to lane_change_log
    int reroute_count{0};
    std::optional<BusProgress> bus;

    bool active() const { return status == VehicleStatus::Active; }
    EdgeId current_edge() const { return route[route_index]; }
    std::optional<EdgeId> next_edge() const {
      return route_index + 1 < route.size() ? std::optional{route[route_index + 1]} : std::nullopt;
    }
  };

  /// Chooses the lane a vehicle takes when entering an edge. `candidates` is non-empty and only
  /// holds permitted lanes whose upstream segment has room.
  class LanePolicy {
  public:
    virtual ~LanePolicy() = default;
    virtual Lane choose_entry_lane(class World const& world,
                                   VehicleState const& vehicle,
                                   EdgeId edge,
                                   std::optional<EdgeId> following,
                                   LaneSet candidates) const = 0;
  };

  /// Fewest occupants on the upstream segment, ties to Left; prefers lanes that connect onward.
  class FewestVehiclesPolicy : public LanePolicy {
  public:
    Lane choose_entry_lane(World const& world,
                           VehicleState const& vehicle,
                           EdgeId edge,
                           std::optional<EdgeId> following,
                           LaneSet candidates) const override;
  };

  struct EngineEvent {
    enum class Type : std::uint8_t { Inject, Transfer, LaneChange, StopArrival, Retire };
    double time{0.};
    Type type{Type::Inject};
    VehicleId vehicle;
    VehicleClass cls{VehicleClass::HDV};
    SegmentRef segment;
    double position{0.};
  };

  std::string_view to_string(EngineEvent::Type type);

  struct ClassCounts {
    std::array<std::size_t, 3> injected{};
    std::array<std::size_t, 3> retired{};
  };

  /// Ground-truth mesoscopic dynamics: FIFO lane segments, speed-density law, spillback,
  /// bus dwell and hold-to-schedule, demand injection.
  class World {
  public:
    World(Scenario const& scenario, ControlParams params, std::uint64_t seed);

    World(World const&) = delete;
    World& operator=(World const&) = delete;
    World(World&&) = default;

    double time() const { return static_cast<double>(m_tick) * m_params.dt_sim; }
    std::uint64_t tick() const { return m_tick; }
    Scenario const& scenario() const { return *m_scenario; }
    NetworkModel const& network() const { return *m_scenario->network; }
    ControlParams const& params() const { return m_params; }

    std::span<VehicleState const> vehicles() const { return m_vehicles; }
    VehicleState const& vehicle(VehicleId id) const { return m_vehicles.at(id.value); }
    /// Occupants ordered downstream first.
    std::span<VehicleId const> occupants(SegmentRef s) const { return m_occupants[network().segment_index(s)]; }
    int count(SegmentRef s) const { return static_cast<int>(occupants(s).size()); }
    /// v_s = v_free * clamp(1 - n/N_jam, eps_v, 1), evaluated with `extra` hypothetical occupants.
    double segment_speed(SegmentRef s, int extra = 0) const;
    double segment_speed_for(int count, int jam, double freeFlowSpeed) const;

    std::vector<LaneChangeRecord> const& lane_changes() const { return m_laneChanges; }
    std::vector<StopArrivalRecord> const& stop_arrivals() const { return m_stopArrivals; }
    std::vector<EngineEvent> const& events() const { return m_events; }
    ClassCounts const& counts() const { return m_counts; }
    std::size_t active_count() const;
    std::size_t pending_count() const { return m_pending.size(); }
    /// True once demand injection is over and no vehicle is pending or active.
    bool drained() const;

    void set_lane_policy(std::shared_ptr<LanePolicy const> policy) { m_lanePolicy = std::move(policy); }
    /// Costs used for CAV initial routes and missed-turn recovery.
    void set_routing_costs(CostView costs) { m_routingCosts = std::move(costs); }
    CostView const& routing_costs() const { return m_routingCosts; }
    /// When set, entries (lane change or edge entry) into a segment for which this returns true are refused.
    /// The vehicle still holds the segment it is leaving (invalid before network entry).
    void set_entry_guard(std::function<bool(VehicleState const&, SegmentRef)> guard) { m_entryGuard = std::move(guard); }
    /// Called on every CAV entry into a dedicated-lane segment from the other lane or from an upstream
    /// edge, with the segment left behind (invalid on network entry) and the one entered.
    void set_dl_entry_observer(std::function<void(VehicleState const&, SegmentRef from, SegmentRef to)> observer) {
      m_dlEntryObserver = std::move(observer);
    }
    void enable_event_log(bool on) { m_logEvents = on; }

    /// Creates vehicles whose departure falls in the current tick and lets pending ones enter.
    std::vector<VehicleId> inject_demand();
    /// Bus departures from terminals and release of buses whose dwell has ended.
    void bus_service();
    /// Advances motion by dt_sim and the clock by one tick.
    void step();

    /// a = -1 moves Right -> Left, a = +1 Left -> Right. Returns false when the target segment is
    /// jammed or the entry guard refuses. Throws std::invalid_argument for non-CAVs or an invalid direction.
    bool execute_lane_change(VehicleId id, int direction, LaneChangeKind kind);

    /// Replaces the remaining route. The new route must keep the traversed prefix and current edge.
    void apply_route(VehicleId id, Route route);

    /// Total injected minus retired minus active, per class; zero when mass is conserved.
    bool conserved() const;
    /// Largest occupancy minus jam count over all segments (<= 0 when storage limits hold).
    int max_overfill() const;

  private:
    struct Departure {
      double time;
      VehicleClass cls;
      NodeId origin;
      NodeId destination;
    };

    VehicleState& mut(VehicleId id) { return m_vehicles.at(id.value); }
    std::vector<VehicleId>& occ(SegmentRef s) { return m_occupants[network().segment_index(s)]; }

    bool try_enter_network(VehicleId id);
    /// Attempts to move a vehicle standing at the end of its current edge onto the next one.
    bool try_cross_node(VehicleState& v, double overshoot);
    void retire(VehicleState& v, double atTime);
    LaneSet entry_candidates(VehicleState const& v, EdgeId edge, std::optional<EdgeId> following) const;
    bool gate_open(EdgeId edge, double atTime) const;
    void insert_sorted(std::vector<VehicleId>& queue, VehicleId id);
    void record_lane_change(VehicleState& v, SegmentRef from, SegmentRef to, int direction, LaneChangeKind kind);
    void log(EngineEvent::Type type, VehicleState const& v);
    void maybe_arrive_at_stop(VehicleState& v, double atTime);

    std::shared_ptr<Scenario const> m_scenario;
    ControlParams m_params;
    std::uint64_t m_tick{0};
    std::vector<VehicleState> m_vehicles;
    std::vector<std::vector<VehicleId>> m_occupants;
    std::vector<Departure> m_departures;  // sorted by time, then creation order
    std::size_t m_nextDeparture{0};
    struct BusDeparture {
      double time;
      BusLineId line;
      std::size_t trip;
    };
    std::vector<BusDeparture> m_busDepartures;
    std::size_t m_nextBus{0};
    std::vector<VehicleId> m_pending;
    std::vector<LaneChangeRecord> m_laneChanges;
    std::vector<StopArrivalRecord> m_stopArrivals;
    std::vector<EngineEvent> m_events;
    ClassCounts m_counts;
    bool m_logEvents{false};
    std::shared_ptr<LanePolicy const> m_lanePolicy;
    CostView m_routingCosts;
    CostView m_freeFlow;
    std::function<bool(VehicleState const&, SegmentRef)> m_entryGuard;
    std::function<void(VehicleState const&, SegmentRef, SegmentRef)> m_dlEntryObserver;
  };

}  // namespace dlsim
