#pragma once

#include "dlsim/ids.hpp"
#include "dlsim/network.hpp"
#include "dlsim/params.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dlsim {

  struct ScheduledStop {
    StopId stop;
    /// Scheduled arrival, seconds after the trip's departure.
    double offset{0.};
  };

  /// A fixed-route bus service with a timetable.
  struct BusLine {
    BusLineId id;
    std::vector<EdgeId> route;
    std::vector<double> departures;
    std::vector<ScheduledStop> stops;
    double dwell{60.};

    double scheduled_arrival(std::size_t trip, std::size_t stopIndex) const {
      return departures.at(trip) + stops.at(stopIndex).offset;
    }
  };

  struct DemandEntry {
    enum class Process { Deterministic, Poisson };

    NodeId origin;
    NodeId destination;
    VehicleClass cls{VehicleClass::CAV};
    Process process{Process::Deterministic};
    std::vector<double> times;
    double rate{0.};
    double start{0.};
    double end{std::numeric_limits<double>::infinity()};
    std::uint64_t seed{0};
  };

  struct DemandSpec {
    std::vector<DemandEntry> entries;
  };

  /// Fixed-cycle gate on an approach edge: vehicles may leave the edge only while green.
  struct SignalGate {
    EdgeId approach;
    double cycle{60.};
    double green_start{0.};
    double green_duration{30.};

    bool green(double t) const;
  };

  struct Scenario {
    std::string name;
    std::shared_ptr<NetworkModel const> network;
    DemandSpec demand;
    std::vector<BusLine> bus_lines;
    std::vector<SignalGate> gates;
    ControlParams control;
    double horizon{900.};
    std::vector<std::string> warnings;

    BusLine const& bus_line(BusLineId id) const;
    /// Lane-level route of a bus line; throws ScenarioError on a non-DL edge.
    std::vector<SegmentRef> bus_route_lane_path(BusLineId id) const;
  };

  /// Parses and validates a scenario document. `source` names the input in error messages.
  Scenario parse_scenario(std::string_view text, std::string const& source = "<scenario>");

  /// Reads a scenario file; throws ScenarioError (parse or validation) with file/field context.
  Scenario load_scenario(std::filesystem::path const& path);

}  // namespace dlsim
