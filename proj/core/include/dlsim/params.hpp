#pragma once

#include <string>
#include <string_view>

namespace dlsim {

  struct BprParams {
    double alpha{0.15};
    double beta{4.};
  };

  /// Order in which conflicting CAVs are considered for rerouting.
  enum class RerouteOrder { FarthestFirst, NearestFirst };

  /// Tunables shared by the engine loop, the predictor and the controllers.
  struct ControlParams {
    // Lane-change utility weights.
    double w1{0.3};
    double w2{0.3};
    double w3{0.4};
    // Bus tolerance (warning trigger).
    double lambda{0.2};
    // Rerouting tolerance on the adjacent GPL segment.
    double gamma{0.3};
    // Rolling horizon of the lane-change rate penalty, seconds.
    double rate_horizon{120.};
    // DRP reroute hysteresis.
    double theta{0.05};
    // Bus protection horizon, seconds.
    double protection_horizon{30.};

    // Control, bus-monitoring and motion steps, seconds.
    double dt{15.};
    double dt_bus{10.};
    double dt_sim{1.};

    BprParams bpr{};
    double v_min{0.1};
    double speed_floor{0.05};

    double on_time_tolerance{30.};
    bool count_forced_in_penalty{true};
    RerouteOrder reroute_order{RerouteOrder::FarthestFirst};

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;

    /// Applies a `key=value` override. Throws std::invalid_argument on unknown keys or bad values.
    void set(std::string_view key, double value);
  };

}  // namespace dlsim
