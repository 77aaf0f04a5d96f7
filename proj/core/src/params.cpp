#include "dlsim/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dlsim {

  namespace {
    bool isMultiple(double value, double base) {
      auto const ratio = value / base;
      return std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1.;
    }

    void require(bool ok, std::string const& what) {
      if (!ok) {
        throw std::invalid_argument{what};
      }
    }
  }  // namespace

  void ControlParams::validate() const {
    require(std::isfinite(w1) && w1 >= 0. && std::isfinite(w2) && w2 >= 0. && std::isfinite(w3) && w3 >= 0.,
            "weights must be finite and >= 0");
    require(lambda > 0. && std::isfinite(lambda), "lambda must be > 0");
    require(gamma > 0. && std::isfinite(gamma), "gamma must be > 0");
    require(rate_horizon > 0. && std::isfinite(rate_horizon), "T must be > 0");
    require(theta >= 0. && theta < 1., "theta must lie in [0, 1)");
    require(bpr.alpha > 0. && std::isfinite(bpr.alpha) && bpr.beta > 0. && std::isfinite(bpr.beta),
            "BPR alpha and beta must be finite and > 0");
    require(dt_sim > 0. && std::isfinite(dt_sim), "dt_sim must be > 0");
    require(isMultiple(dt, dt_sim), "dt must be an integer multiple of dt_sim");
    require(isMultiple(dt_bus, dt_sim), "dt_b must be an integer multiple of dt_sim");
    require(protection_horizon > 0. && std::isfinite(protection_horizon), "dT_b must be > 0");
    require(protection_horizon >= dt_bus, "dT_b must be >= dt_b");
    require(v_min > 0., "v_min must be > 0");
    require(speed_floor > 0. && speed_floor <= 1., "eps_v must lie in (0, 1]");
    require(on_time_tolerance >= 0., "tolerance must be >= 0");
  }

  void ControlParams::set(std::string_view key, double value) {
    if (!std::isfinite(value)) {
      throw std::invalid_argument{"value for " + std::string{key} + " must be finite"};
    }
    if (key == "w1") {
      w1 = value;
    } else if (key == "w2") {
      w2 = value;
    } else if (key == "w3") {
      w3 = value;
    } else if (key == "lambda") {
      lambda = value;
    } else if (key == "gamma") {
      gamma = value;
    } else if (key == "T") {
      rate_horizon = value;
    } else if (key == "theta") {
      theta = value;
    } else if (key == "dT_b") {
      protection_horizon = value;
    } else if (key == "dt") {
      dt = value;
    } else if (key == "dt_b") {
      dt_bus = value;
    } else if (key == "dt_sim") {
      dt_sim = value;
    } else if (key == "alpha") {
      bpr.alpha = value;
    } else if (key == "beta") {
      bpr.beta = value;
    } else if (key == "v_min") {
      v_min = value;
    } else if (key == "eps_v") {
      speed_floor = value;
    } else if (key == "tolerance") {
      on_time_tolerance = value;
    } else if (key == "count_forced") {
      count_forced_in_penalty = value != 0.;
    } else if (key == "reroute_nearest_first") {
      reroute_order = value != 0. ? RerouteOrder::NearestFirst : RerouteOrder::FarthestFirst;
    } else {
      throw std::invalid_argument{"unknown parameter '" + std::string{key} + "'"};
    }
  }

}  // namespace dlsim
