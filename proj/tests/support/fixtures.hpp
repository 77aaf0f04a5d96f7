#pragma once

#include "dlsim/scenario.hpp"

#include <json.hpp>

#include <string>

namespace dlsim::testing {

  /// Straight two-edge corridor 1 -> 2 -> 3 with a dedicated lane on both edges and a GPL-only
  /// bypass 1 -> 4 -> 3. Edges: 1 (1->2), 2 (2->3), 3 (1->4), 4 (4->3). Stop 1 on edge 2.
  inline nlohmann::json corridor_document() {
    using nlohmann::json;
    auto edge = [](int id, int from, int to, double length, bool dl) {
      json e{{"id", id}, {"from", from}, {"to", to}, {"length", length}, {"free_flow_speed", 10.},
             {"capacity", 0.5}, {"jam_count", 10}};
      if (dl) {
        e["dl"] = true;
        e["dl_capacity"] = 0.1;
      }
      return e;
    };
    return json{
        {"name", "corridor"},
        {"horizon", 300},
        {"nodes", {1, 2, 3, 4}},
        {"edges", {edge(1, 1, 2, 200., true), edge(2, 2, 3, 200., true), edge(3, 1, 4, 300., false),
                   edge(4, 4, 3, 300., false)}},
        {"connections",
         {{{"from", 1}, {"to", 2}, {"lanes", {"L", "R"}}}, {{"from", 3}, {"to", 4}, {"lanes", {"L", "R"}}}}},
        {"bus_stops", {{{"id", 1}, {"edge", 2}, {"offset", 150.}}}},
        {"bus_lines", json::array()},
        {"demand", json::array()},
    };
  }

  inline Scenario corridor(nlohmann::json const& doc = corridor_document()) {
    return parse_scenario(doc.dump(), "corridor");
  }

  /// Corridor with deterministic CAV/HDV arrivals and one bus trip.
  inline nlohmann::json busy_corridor_document() {
    auto doc = corridor_document();
    doc["bus_lines"] = {{{"id", 1}, {"route", {1, 2}}, {"departures", {20}},
                         {"stops", {{{"stop", 1}, {"scheduled", 40.}}}}, {"dwell", 20.}}};
    doc["demand"] = {
        {{"origin", 1}, {"destination", 3}, {"class", "cav"}, {"times", {0, 3, 6, 9, 12, 15, 18, 21, 24, 27}}},
        {{"origin", 1}, {"destination", 3}, {"class", "hdv"}, {"rate", 0.2}, {"start", 0}, {"end", 120}, {"seed", 7}},
    };
    return doc;
  }

}  // namespace dlsim::testing
