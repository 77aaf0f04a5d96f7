#include "dlsim/engine.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace dlsim;

namespace {
  void runFor(World& world, int ticks) {
    for (int t = 0; t < ticks; ++t) {
      world.bus_service();
      world.inject_demand();
      world.step();
    }
  }
}  // namespace

TEST_CASE("speed-density law with a floor") {
  auto const sc = dlsim::testing::corridor();
  World const world{sc, sc.control, 1};
  CHECK(world.segment_speed_for(0, 10, 10.) == 10.);
  CHECK(world.segment_speed_for(5, 10, 10.) == doctest::Approx(5.));
  CHECK(world.segment_speed_for(10, 10, 10.) == doctest::Approx(0.5));
  CHECK(world.segment_speed_for(12, 10, 10.) == doctest::Approx(0.5));
}

TEST_CASE("a lone vehicle crosses the corridor at its own-density speed") {
  auto doc = dlsim::testing::corridor_document();
  doc["demand"] = {{{"origin", 1}, {"destination", 3}, {"class", "hdv"}, {"times", {0}}}};
  auto const sc = dlsim::testing::corridor(doc);
  World world{sc, sc.control, 1};
  runFor(world, 60);
  REQUIRE(world.counts().retired[0] == 1);
  auto const& v = world.vehicles().front();
  CHECK(v.lane_change_log.empty());
  // One occupant out of ten slows the segment to 9 m/s.
  CHECK(*v.arrival_time - v.depart_time >= 400. / 9.);
  CHECK(*v.arrival_time - v.depart_time <= 400. / 9. + 2.);
  CHECK(world.drained());
}

TEST_CASE("storage, FIFO order and conservation hold every tick") {
  auto doc = dlsim::testing::busy_corridor_document();
  doc["edges"][1]["jam_count"] = 3;
  auto const sc = dlsim::testing::corridor(doc);
  World world{sc, sc.control, 3};
  auto const& net = world.network();
  for (int t = 0; t < 400; ++t) {
    world.bus_service();
    world.inject_demand();
    world.step();
    REQUIRE(world.conserved());
    REQUIRE(world.max_overfill() <= 0);
    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const occ = world.occupants(net.segment_at(i));
      for (std::size_t k = 1; k < occ.size(); ++k) {
        CHECK(world.vehicle(occ[k - 1]).position >= world.vehicle(occ[k]).position);
      }
      for (auto id : occ) {
        CHECK(world.vehicle(id).segment == net.segment_at(i));
        CHECK(permitted_lanes(world.vehicle(id).cls, net.edge(net.segment_at(i).edge)).contains(net.segment_at(i).lane));
      }
    }
  }
}

TEST_CASE("buses use the dedicated lane, dwell and hold to schedule") {
  auto const sc = dlsim::testing::corridor(dlsim::testing::busy_corridor_document());
  World world{sc, sc.control, 1};
  runFor(world, 300);
  REQUIRE(world.stop_arrivals().size() == 1);
  auto const& a = world.stop_arrivals().front();
  CHECK(a.scheduled == doctest::Approx(60.));
  CHECK(a.departure >= std::max(a.actual, a.scheduled) + 20. - 1e-9);
  for (auto const& v : world.vehicles()) {
    if (v.cls == VehicleClass::Bus) {
      CHECK(v.lane_change_log.empty());
      CHECK(v.arrival_time);
    }
  }
}

TEST_CASE("lane changes check class, direction and room") {
  auto doc = dlsim::testing::corridor_document();
  doc["demand"] = {{{"origin", 1}, {"destination", 3}, {"class", "cav"}, {"times", {0}}},
                   {{"origin", 1}, {"destination", 3}, {"class", "hdv"}, {"times", {0}}}};
  auto const sc = dlsim::testing::corridor(doc);
  World world{sc, sc.control, 1};
  world.inject_demand();
  world.step();
  VehicleId cav;
  VehicleId hdv;
  for (auto const& v : world.vehicles()) {
    (v.cls == VehicleClass::CAV ? cav : hdv) = v.id;
  }
  CHECK_THROWS_AS(world.execute_lane_change(hdv, +1, LaneChangeKind::Utility), std::invalid_argument);
  CHECK_THROWS_AS(world.execute_lane_change(cav, 2, LaneChangeKind::Utility), std::invalid_argument);
  auto const lane = world.vehicle(cav).segment.lane;
  int const dir = lane == Lane::Left ? +1 : -1;
  CHECK(world.execute_lane_change(cav, dir, LaneChangeKind::Utility));
  CHECK(world.vehicle(cav).segment.lane == other(lane));
  CHECK(world.vehicle(cav).lane_change_log.size() == 1);
  CHECK(world.lane_changes().back().direction == dir);

  world.set_entry_guard([](VehicleState const&, SegmentRef) { return true; });
  CHECK_FALSE(world.execute_lane_change(cav, -dir, LaneChangeKind::Utility));
  CHECK(world.vehicle(cav).segment.lane == other(lane));
}

TEST_CASE("identical seeds give identical event streams") {
  auto const sc = dlsim::testing::corridor(dlsim::testing::busy_corridor_document());
  World a{sc, sc.control, 9};
  World b{sc, sc.control, 9};
  a.enable_event_log(true);
  b.enable_event_log(true);
  runFor(a, 300);
  runFor(b, 300);
  REQUIRE(a.events().size() == b.events().size());
  for (std::size_t i = 0; i < a.events().size(); ++i) {
    CHECK(a.events()[i].time == b.events()[i].time);
    CHECK(a.events()[i].vehicle == b.events()[i].vehicle);
    CHECK(a.events()[i].type == b.events()[i].type);
    CHECK(a.events()[i].position == b.events()[i].position);
  }
}
