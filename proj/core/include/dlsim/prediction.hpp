#pragma once

#include "dlsim/engine.hpp"
#include "dlsim/ids.hpp"
#include "dlsim/network.hpp"
#include "dlsim/params.hpp"
#include "dlsim/routing.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dlsim {

  // Short-horizon segment prediction: constant-speed entry times, inflow estimates,
  // BPR traversal times, bus ETAs, protection windows and conflict inflows.

  /// Predicted time to the entrance of `s` along the vehicle's planned path, or nullopt when `s`
  /// is not ahead on the remaining route. The planned lane on future edges is the current lane when
  /// permitted there, otherwise Left (buses always Right). Speed is floored at `vMin`.
  std::optional<double> entry_time(NetworkModel const& net, VehicleState const& v, SegmentRef s, double vMin);

  /// Lane-agnostic variant used for bus-overlap tests: time until the vehicle is longitudinally at
  /// `s`. Vehicles already on s.edge with the same m (in either lane) get 0.
  std::optional<double> reach_time(NetworkModel const& net, VehicleState const& v, SegmentRef s, double vMin);

  /// 1 iff tau lies in [0, dt).
  int entry_indicator(std::optional<double> tau, double dt);

  /// t0 * (1 + alpha (flow/capacity)^beta). Throws std::invalid_argument on t0 <= 0, capacity <= 0 or flow < 0.
  double bpr_time(double t0, double flow, double capacity, BprParams const& params);

  struct Interval {
    double lo{0.};
    double hi{0.};

    /// Closed-interval membership.
    bool contains(double x) const { return x >= lo && x <= hi; }
  };

  /// [max(0, eta - horizon), eta + horizon]. Throws std::invalid_argument when horizon <= 0 or eta < 0.
  Interval protection_window(double eta, double horizon);

  /// Bus time to enter DL segment `s` from now: constant-speed travel (free-flow while dwelling)
  /// plus residual dwell plus full dwells at intermediate stops. nullopt when `s` is behind the bus.
  std::optional<double> bus_eta(World const& world, VehicleState const& bus, SegmentRef s);

  /// Sum of binary overlap indicators divided by 2 * horizon.
  double conflict_inflow(std::size_t overlapping, double horizon);

  struct Entrant {
    VehicleId vehicle;
    double tau{0.};
  };

  struct BusWindow {
    VehicleId bus;
    double eta{0.};
    Interval window;
  };

  /// Per-segment values of one snapshot.
  struct SegmentForecast {
    std::vector<Entrant> cav_entrants;  // I_{i,s} = 1, ordered by vehicle id
    std::vector<Entrant> hdv_entrants;  // HDV estimate, same projection
    double inflow{0.};                  // f^dl for DL segments, f^gpl otherwise
    double predicted_time{0.};          // t^dl / t^gpl

    std::vector<BusWindow> windows;     // DL segments only
    std::vector<Entrant> overlapping;   // CAVs with I^bus = 1, ordered by vehicle id
    double conflict_inflow{0.};         // q_s
    double bus_time{0.};                // t_{b,s}
  };

  /// Everything the controllers read at one decision instant. Immutable after build.
  class PredictionSnapshot {
  public:
    PredictionSnapshot() = default;

    /// Full rebuild (flow and bus parts).
    static PredictionSnapshot build(World const& world);

    /// Recomputes entrants, inflows and traversal times.
    void refresh_flow(World const& world);
    /// Recomputes bus windows, overlap indicators, conflict inflows and bus times.
    void refresh_bus(World const& world);

    double flow_time() const { return m_flowTime; }
    double bus_time_stamp() const { return m_busTime; }
    NetworkModel const* network() const { return m_net; }
    double dt() const { return m_dt; }
    double protection_horizon() const { return m_horizon; }

    SegmentForecast const& at(SegmentRef s) const { return m_segments.at(m_net->segment_index(s)); }
    std::span<SegmentForecast const> segments() const { return m_segments; }

    /// Throws std::invalid_argument when `s` is not a dedicated-lane segment.
    double dl_inflow(SegmentRef s) const;
    /// Throws std::invalid_argument when `s` is a dedicated-lane segment.
    double gpl_inflow(SegmentRef s) const;
    double predicted_time(SegmentRef s) const { return at(s).predicted_time; }
    bool has_window(SegmentRef s) const { return !at(s).windows.empty(); }
    /// I^bus_{i,s}
    bool overlaps(VehicleId cav, SegmentRef s) const;
    /// t_{b,s}; free-flow time when no bus approaches.
    double bus_time(SegmentRef s) const { return at(s).bus_time; }

    /// Per-edge routing cost: sum over both segments of the fastest permitted lane's predicted time.
    CostView costs(VehicleClass cls) const;

  private:
    NetworkModel const* m_net{nullptr};
    std::vector<SegmentForecast> m_segments;
    double m_flowTime{-1.};
    double m_busTime{-1.};
    double m_dt{15.};
    double m_horizon{30.};
  };

  /// Recomputes BPR time for a segment from entrant counts (used by what-if evaluations).
  double forecast_time(NetworkModel const& net,
                       SegmentRef s,
                       std::size_t cavEntrants,
                       std::size_t hdvEntrants,
                       double dt,
                       BprParams const& bpr);

  /// Bus BPR time from an overlap count.
  double forecast_bus_time(NetworkModel const& net,
                           SegmentRef s,
                           std::size_t overlapping,
                           double horizon,
                           BprParams const& bpr);

}  // namespace dlsim
