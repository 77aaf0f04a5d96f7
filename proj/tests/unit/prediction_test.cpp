#include "dlsim/engine.hpp"
#include "dlsim/prediction.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dlsim;

namespace {
  VehicleState cavAt(SegmentRef s, double position, double speed, Route route) {
    VehicleState v;
    v.id = VehicleId{0};
    v.cls = VehicleClass::CAV;
    v.status = VehicleStatus::Active;
    v.route = std::move(route);
    v.segment = s;
    v.position = position;
    v.speed = speed;
    return v;
  }
}  // namespace

TEST_CASE("entry time is remaining distance over current speed") {
  auto const sc = dlsim::testing::corridor();
  auto const& net = *sc.network;
  EdgeId const e1{1};
  EdgeId const e2{2};
  SUBCASE("at the entrance") {
    auto const v = cavAt({e1, Lane::Left, 1}, 100., 10., {e1, e2});
    CHECK(*entry_time(net, v, {e1, Lane::Left, 2}, 0.1) == 0.);
  }
  SUBCASE("100 m at 10 m/s") {
    auto const v = cavAt({e1, Lane::Left, 1}, 0., 10., {e1, e2});
    CHECK(*entry_time(net, v, {e1, Lane::Left, 2}, 0.1) == doctest::Approx(10.));
    CHECK(*entry_time(net, v, {e2, Lane::Left, 1}, 0.1) == doctest::Approx(20.));
  }
  SUBCASE("stationary vehicles use the speed floor") {
    auto const v = cavAt({e1, Lane::Left, 1}, 90., 0., {e1, e2});
    CHECK(*entry_time(net, v, {e1, Lane::Left, 2}, 0.1) == doctest::Approx(100.));
  }
  SUBCASE("off-route and behind segments give none") {
    auto const v = cavAt({e1, Lane::Left, 2}, 150., 10., {e1, e2});
    CHECK_FALSE(entry_time(net, v, {EdgeId{3}, Lane::Left, 1}, 0.1));
    CHECK_FALSE(entry_time(net, v, {e1, Lane::Left, 1}, 0.1));
    CHECK_FALSE(entry_time(net, v, {e1, Lane::Left, 2}, 0.1));
  }
  SUBCASE("planned lane persists downstream") {
    auto const v = cavAt({e1, Lane::Right, 1}, 0., 10., {e1, e2});
    CHECK(entry_time(net, v, {e2, Lane::Right, 1}, 0.1));
    CHECK_FALSE(entry_time(net, v, {e2, Lane::Left, 1}, 0.1));
  }
  SUBCASE("reach time ignores the lane and counts occupants as zero") {
    auto const v = cavAt({e1, Lane::Left, 2}, 150., 10., {e1, e2});
    CHECK(*reach_time(net, v, {e1, Lane::Right, 2}, 0.1) == 0.);
    CHECK(*reach_time(net, v, {e2, Lane::Right, 1}, 0.1) == doctest::Approx(5.));
  }
}

TEST_CASE("entry indicator is half-open") {
  CHECK(entry_indicator(0., 15.) == 1);
  CHECK(entry_indicator(14.999, 15.) == 1);
  CHECK(entry_indicator(15., 15.) == 0);
  CHECK(entry_indicator(-1e-9, 15.) == 0);
  CHECK(entry_indicator(std::nullopt, 15.) == 0);
}

TEST_CASE("BPR anchors and argument checks") {
  BprParams const p;
  CHECK(bpr_time(10., 0., 0.5, p) == 10.);
  CHECK(bpr_time(10., 0.5, 0.5, p) == doctest::Approx(11.5));
  CHECK(bpr_time(20., 1., 0.5, p) == doctest::Approx(20. * (1. + 0.15 * 16.)));
  CHECK_THROWS_AS(bpr_time(0., 0., 0.5, p), std::invalid_argument);
  CHECK_THROWS_AS(bpr_time(10., 0., 0., p), std::invalid_argument);
  CHECK_THROWS_AS(bpr_time(10., -1., 0.5, p), std::invalid_argument);
}

TEST_CASE("BPR matches arbitrary precision evaluation") {
  std::mt19937_64 rng{5};
  std::uniform_real_distribution<double> t0{0.5, 120.};
  std::uniform_real_distribution<double> cap{0.01, 2.};
  std::uniform_real_distribution<double> ratio{0., 3.};
  std::uniform_real_distribution<double> alpha{0.01, 1.};
  std::uniform_real_distribution<double> beta{0.5, 8.};
  for (int i = 0; i < 200; ++i) {
    BprParams const p{alpha(rng), beta(rng)};
    double const c = cap(rng);
    double const f = ratio(rng) * c;
    double const a = t0(rng);
    double const ref = dlsim::testing::bpr_reference(a, f, c, p);
    CHECK(std::abs(bpr_time(a, f, c, p) - ref) <= 1e-9 * ref);
  }
}

TEST_CASE("BPR time is monotone in flow and never below free flow") {
  BprParams const p;
  double last = 0.;
  for (double f = 0.; f < 2.; f += 0.05) {
    double const t = bpr_time(8., f, 0.4, p);
    CHECK(t >= 8.);
    CHECK(t >= last);
    last = t;
  }
}

TEST_CASE("protection window is closed and clipped at zero") {
  auto const w = protection_window(40., 30.);
  CHECK(w.lo == 10.);
  CHECK(w.hi == 70.);
  CHECK(w.contains(10.));
  CHECK(w.contains(70.));
  CHECK_FALSE(w.contains(70.0000001));
  CHECK(protection_window(5., 30.).lo == 0.);
  CHECK_THROWS_AS(protection_window(5., 0.), std::invalid_argument);
  CHECK_THROWS_AS(protection_window(-1., 30.), std::invalid_argument);
}

TEST_CASE("conflict inflow") {
  CHECK(conflict_inflow(0, 30.) == 0.);
  CHECK(conflict_inflow(3, 30.) == doctest::Approx(0.05));
}

TEST_CASE("snapshot invariants during a run") {
  auto const sc = dlsim::testing::corridor(dlsim::testing::busy_corridor_document());
  World world{sc, sc.control, 1};
  auto const& net = world.network();
  bool sawWindow = false;
  for (int t = 0; t < 200; ++t) {
    world.bus_service();
    world.inject_demand();
    auto const snap = PredictionSnapshot::build(world);
    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const s = net.segment_at(i);
      auto const& f = snap.at(s);
      CHECK(f.inflow >= 0.);
      CHECK(f.predicted_time >= net.free_flow_time(s) - 1e-12);
      CHECK(f.bus_time >= net.free_flow_time(s) - 1e-12);
      CHECK(f.conflict_inflow >= 0.);
      if (!net.is_dl(s)) {
        CHECK(f.windows.empty());
        CHECK_THROWS_AS(snap.dl_inflow(s), std::invalid_argument);
      } else {
        CHECK_THROWS_AS(snap.gpl_inflow(s), std::invalid_argument);
        sawWindow = sawWindow || !f.windows.empty();
      }
      for (auto const& w : f.windows) {
        CHECK(w.window.lo >= 0.);
        CHECK(w.window.hi - w.window.lo <= 2. * snap.protection_horizon() + 1e-9);
      }
      for (auto const& c : f.overlapping) {
        CHECK(snap.overlaps(c.vehicle, s));
        CHECK(world.vehicle(c.vehicle).cls == VehicleClass::CAV);
      }
      CHECK(f.conflict_inflow == doctest::Approx(conflict_inflow(f.overlapping.size(), snap.protection_horizon())));
    }
    world.step();
  }
  CHECK(sawWindow);
}
