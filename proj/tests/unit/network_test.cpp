#include "dlsim/network.hpp"
#include "dlsim/scenario.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace dlsim;
using dlsim::testing::corridor;
using dlsim::testing::corridor_document;

namespace {
  ScenarioError::Kind loadKind(nlohmann::json const& doc) {
    try {
      parse_scenario(doc.dump(), "doc");
    } catch (ScenarioError const& e) {
      return e.kind();
    }
    FAIL("expected a ScenarioError");
    return ScenarioError::Kind::Parse;
  }
}  // namespace

TEST_CASE("lane permissions per class") {
  Edge dl;
  dl.right_lane_is_dl = true;
  Edge plain;
  CHECK(permitted_lanes(VehicleClass::Bus, dl) == LaneSet{Lane::Right});
  CHECK(permitted_lanes(VehicleClass::Bus, plain).empty());
  CHECK(permitted_lanes(VehicleClass::HDV, dl) == LaneSet{Lane::Left});
  CHECK(permitted_lanes(VehicleClass::HDV, plain) == LaneSet{Lane::Left, Lane::Right});
  CHECK(permitted_lanes(VehicleClass::CAV, dl) == LaneSet{Lane::Left, Lane::Right});
}

TEST_CASE("segments split an edge in two halves") {
  auto const sc = corridor();
  auto const& net = *sc.network;
  EdgeId const e{1};
  CHECK(net.segment_of(e, Lane::Left, 0.).m == 1);
  CHECK(net.segment_of(e, Lane::Left, 99.9).m == 1);
  CHECK(net.segment_of(e, Lane::Left, 100.).m == 2);
  CHECK(net.segment_of(e, Lane::Right, 200.).m == 2);
  CHECK(net.free_flow_time(SegmentRef{e, Lane::Left, 1}) == doctest::Approx(10.));
  CHECK(net.is_dl(SegmentRef{e, Lane::Right, 1}));
  CHECK_FALSE(net.is_dl(SegmentRef{e, Lane::Left, 1}));
  CHECK_FALSE(net.is_dl(SegmentRef{EdgeId{3}, Lane::Right, 1}));
  for (std::size_t i = 0; i < net.segment_count(); ++i) {
    CHECK(net.segment_index(net.segment_at(i)) == i);
  }
}

TEST_CASE("capacities convert to vehicles per second") {
  auto doc = corridor_document();
  doc["edges"][2]["capacity"] = 1800.;
  doc["edges"][2]["capacity_unit"] = "veh/h";
  auto const sc = corridor(doc);
  CHECK(sc.network->capacity(SegmentRef{EdgeId{3}, Lane::Left, 1}) == doctest::Approx(0.5));
  CHECK(sc.network->capacity(SegmentRef{EdgeId{1}, Lane::Right, 2}) == doctest::Approx(0.1));
}

TEST_CASE("turn connectivity and prohibited turns") {
  auto doc = corridor_document();
  doc["connections"][0]["lanes"] = {"L"};
  doc["connections"].push_back({{"from", 3}, {"to", 4}, {"lanes", nlohmann::json::array()}});
  doc["connections"].erase(1);
  auto const sc = corridor(doc);
  auto const& net = *sc.network;
  CHECK(net.connects(EdgeId{1}, Lane::Left, EdgeId{2}));
  CHECK_FALSE(net.connects(EdgeId{1}, Lane::Right, EdgeId{2}));
  CHECK(net.connecting_lanes(EdgeId{3}, EdgeId{4}).empty());
  CHECK_FALSE(net.turn_allowed(EdgeId{3}, EdgeId{4}, VehicleClass::CAV));
  CHECK(net.turn_allowed(EdgeId{1}, EdgeId{2}, VehicleClass::HDV));
  CHECK_FALSE(net.turn_allowed(EdgeId{1}, EdgeId{2}, VehicleClass::Bus));
}

TEST_CASE("missing connections are synthesized with a warning") {
  auto doc = corridor_document();
  doc["connections"] = nlohmann::json::array();
  auto const sc = corridor(doc);
  CHECK(sc.network->connecting_lanes(EdgeId{1}, EdgeId{2}) == LaneSet{Lane::Left, Lane::Right});
  CHECK(sc.warnings.size() == 2);
}

TEST_CASE("bus lane path requires dedicated lanes") {
  auto const sc = corridor();
  std::vector<EdgeId> const route{EdgeId{1}, EdgeId{2}};
  auto const path = sc.network->bus_route_lane_path(route);
  REQUIRE(path.size() == 4);
  CHECK(path[0] == SegmentRef{EdgeId{1}, Lane::Right, 1});
  CHECK(path[3] == SegmentRef{EdgeId{2}, Lane::Right, 2});
  std::vector<EdgeId> const bad{EdgeId{3}};
  CHECK_THROWS_AS(sc.network->bus_route_lane_path(bad), ScenarioError);
}

TEST_CASE("scenario validation errors") {
  SUBCASE("malformed json is a parse error") {
    CHECK_THROWS_AS(parse_scenario("{\"nodes\": [1,", "x"), ScenarioError);
    try {
      parse_scenario("{\"nodes\": [1,", "x");
    } catch (ScenarioError const& e) {
      CHECK(e.kind() == ScenarioError::Kind::Parse);
    }
  }
  SUBCASE("unknown node") {
    auto doc = corridor_document();
    doc["edges"][0]["to"] = 99;
    CHECK(loadKind(doc) == ScenarioError::Kind::Validation);
  }
  SUBCASE("non-positive capacity") {
    auto doc = corridor_document();
    doc["edges"][0]["capacity"] = 0.;
    CHECK(loadKind(doc) == ScenarioError::Kind::Validation);
  }
  SUBCASE("duplicate edge") {
    auto doc = corridor_document();
    doc["edges"][1]["id"] = 1;
    CHECK(loadKind(doc) == ScenarioError::Kind::Validation);
  }
  SUBCASE("bus route through a general lane") {
    auto doc = corridor_document();
    doc["bus_lines"] = {{{"id", 1}, {"route", {3, 4}}, {"departures", {0}}, {"stops", nlohmann::json::array()}}};
    CHECK(loadKind(doc) == ScenarioError::Kind::Validation);
  }
  SUBCASE("unreachable demand") {
    auto doc = corridor_document();
    doc["demand"] = {{{"origin", 3}, {"destination", 1}, {"class", "cav"}, {"times", {0}}}};
    CHECK(loadKind(doc) == ScenarioError::Kind::Validation);
  }
  SUBCASE("wrong field type") {
    auto doc = corridor_document();
    doc["edges"][0]["length"] = "long";
    CHECK(loadKind(doc) == ScenarioError::Kind::Parse);
  }
  SUBCASE("unknown control key") {
    auto doc = corridor_document();
    doc["control"] = {{"w9", 1.}};
    CHECK(loadKind(doc) == ScenarioError::Kind::Parse);
  }
}

TEST_CASE("bundled presets load") {
  for (auto const* name : {"desk_small.json", "desk_large.json"}) {
    auto const sc = load_scenario(std::filesystem::path{DLSIM_DATA_DIR} / name);
    CHECK(sc.network->nodes().size() == 21);
    CHECK(sc.network->stops().size() == 3);
    CHECK(sc.bus_lines.size() == 1);
    CHECK(sc.warnings.empty());
  }
}
