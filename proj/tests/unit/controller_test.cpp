#include "dlsim/controller.hpp"
#include "dlsim/engine.hpp"
#include "dlsim/prediction.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace dlsim;

TEST_CASE("strategy tags") {
  CHECK(parse_strategy("drp") == Strategy::DRP);
  CHECK(parse_strategy("PRP") == Strategy::PRP);
  CHECK(parse_strategy("Proposed") == Strategy::Proposed);
  CHECK_THROWS_AS(parse_strategy("greedy"), std::invalid_argument);
  CHECK(to_string(Strategy::Proposed) == "proposed");
}

TEST_CASE("bus warning is a strict inequality") {
  double const t0 = 7.2;
  double const lambda = 0.2;
  CHECK_FALSE(bus_warning(t0, t0, lambda));
  CHECK_FALSE(bus_warning((1. + lambda) * t0, t0, lambda));
  CHECK(bus_warning(std::nextafter((1. + lambda) * t0, 1e9), t0, lambda));
  CHECK(bus_warning(2. * t0, t0, lambda));
}

TEST_CASE("time benefit") {
  CHECK(u1_time_benefit(12., 9., 10.) == doctest::Approx(0.3));
  CHECK(u1_time_benefit(9., 12., 10.) == doctest::Approx(-0.3));
  CHECK(u1_time_benefit(10., 10., 10.) == 0.);
}

TEST_CASE("route feasibility of a lane change") {
  auto doc = dlsim::testing::corridor_document();
  doc["connections"][0]["lanes"] = {"L"};
  auto const sc = dlsim::testing::corridor(doc);
  VehicleState v;
  v.cls = VehicleClass::CAV;
  v.status = VehicleStatus::Active;
  v.route = {EdgeId{1}, EdgeId{2}};
  v.segment = {EdgeId{1}, Lane::Left, 2};
  CHECK(u2_feasibility(*sc.network, v, Lane::Left) == 1);
  CHECK(u2_feasibility(*sc.network, v, Lane::Right) == 0);
  v.segment.m = 1;
  CHECK(u2_feasibility(*sc.network, v, Lane::Right) == 1);
  v.route_index = 1;
  v.segment = {EdgeId{2}, Lane::Left, 2};
  CHECK(u2_feasibility(*sc.network, v, Lane::Right) == 1);
}

TEST_CASE("rate penalty counts the rolling window") {
  std::vector<double> const log{10., 100., 130., 200.};
  CHECK(u3_rate_penalty(log, 200., 120., 15.) == doctest::Approx(-3. / 8.));
  CHECK(u3_rate_penalty(log, 220., 120., 15.) == doctest::Approx(-2. / 8.));
  CHECK(u3_rate_penalty({}, 50., 120., 15.) == 0.);
}

TEST_CASE("rate penalty stays in [-1, 0] while the count is bounded") {
  std::mt19937_64 rng{11};
  std::uniform_real_distribution<double> when{0., 600.};
  for (int trial = 0; trial < 1000; ++trial) {
    double const now = 600.;
    std::vector<double> log;
    std::uniform_int_distribution<int> n{0, 8};
    for (int k = n(rng); k > 0; --k) {
      log.push_back(when(rng));
    }
    double const u3 = u3_rate_penalty(log, now, 120., 15.);
    CHECK(u3 <= 0.);
    CHECK(u3 >= -1.);
  }
}

TEST_CASE("utility is the weighted sum") {
  ControlParams p;
  CHECK(utility(1., 1., -1., p) == doctest::Approx(0.3 + 0.3 - 0.4));
  p.w2 = 0.;
  CHECK(utility(0.5, 1., 0., p) == doctest::Approx(0.15));
}

TEST_CASE("winner selection equals exhaustive enumeration") {
  std::mt19937_64 rng{3};
  std::uniform_int_distribution<std::size_t> size{0, 10};
  for (int trial = 0; trial < 1000; ++trial) {
    auto const scored = dlsim::testing::random_candidates(rng, size(rng));
    auto const got = select_winner(scored);
    auto const want = dlsim::testing::select_reference(scored);
    REQUIRE(got.winner == want.winner);
    CHECK(got.fired == want.fired);
    if (got.fired) {
      CHECK(got.utility > 0.);
    }
  }
}

TEST_CASE("winner and fire decision are invariant under positive scaling") {
  std::mt19937_64 rng{4};
  std::uniform_int_distribution<std::size_t> size{1, 10};
  std::uniform_real_distribution<double> scale{1e-3, 1e3};
  for (int trial = 0; trial < 1000; ++trial) {
    auto scored = dlsim::testing::random_candidates(rng, size(rng));
    auto const before = select_winner(scored);
    double const c = scale(rng);
    for (auto& s : scored) {
      s.utility *= c;
    }
    auto const after = select_winner(scored);
    CHECK(before.winner == after.winner);
    CHECK(before.fired == after.fired);
  }
}

TEST_CASE("ties go to the lowest id") {
  std::vector<ScoredCandidate> const scored{{VehicleId{7}, 0.4}, {VehicleId{2}, 0.4}, {VehicleId{5}, 0.1}};
  auto const sel = select_winner(scored);
  CHECK(*sel.winner == VehicleId{2});
  CHECK(sel.fired);
  std::vector<ScoredCandidate> const zero{{VehicleId{1}, 0.}};
  CHECK_FALSE(select_winner(zero).fired);
  CHECK_FALSE(select_winner({}).winner);
}

TEST_CASE("controller decisions respect protection during a run") {
  auto const sc = dlsim::testing::corridor(dlsim::testing::busy_corridor_document());
  auto const& params = sc.control;
  for (auto strategy : {Strategy::DRP, Strategy::PRP, Strategy::Proposed}) {
    CAPTURE(to_string(strategy));
    World world{sc, params, 1};
    std::size_t forcedSeen = 0;
    for (int tick = 0; tick < 300; ++tick) {
      world.bus_service();
      world.inject_demand();
      if (tick % 15 == 0) {
        auto const snap = PredictionSnapshot::build(world);
        auto const protection = protection_actions(world, snap, params);
        for (auto const& f : protection.forced) {
          CHECK(f.direction == -1);
          CHECK(f.forced);
          CHECK(world.network().is_dl(f.from));
          CHECK(snap.overlaps(f.vehicle, f.from));
          CHECK(protection.warning(f.from));
        }
        for (auto const& s : protection.warned) {
          CHECK(bus_warning(s, snap, params.lambda));
        }
        auto const decision = strategy_step(strategy, world, snap, protection, params);
        std::map<SegmentRef, int> utilityMoves;
        std::set<VehicleId> acted;
        bool forcedPhase = true;
        for (auto const& a : decision.actions) {
          CHECK(acted.insert(a.vehicle).second);
          if (a.forced) {
            CHECK(forcedPhase);
            ++forcedSeen;
          } else {
            forcedPhase = false;
          }
          if (a.kind == LaneChangeKind::Utility) {
            CHECK(++utilityMoves[a.from] == 1);
            CHECK(a.utility > 0.);
          }
          if (a.direction == +1 && strategy != Strategy::DRP) {
            auto const target = adjacent(a.from);
            CHECK_FALSE((protection.warning(target) && snap.overlaps(a.vehicle, target)));
            CHECK_FALSE(protection.banned(a.vehicle, target));
          }
          if (strategy == Strategy::Proposed && a.direction == +1) {
            CHECK_FALSE(snap.overlaps(a.vehicle, adjacent(a.from)));
          }
        }
        for (auto const& a : decision.actions) {
          if (world.vehicle(a.vehicle).segment == a.from) {
            world.execute_lane_change(a.vehicle, a.direction, a.kind);
          }
        }
      }
      world.step();
      REQUIRE(world.conserved());
    }
    if (strategy == Strategy::DRP) {
      CHECK(forcedSeen == 0);
    }
  }
}

TEST_CASE("candidate sets only hold admissible moves") {
  auto const sc = dlsim::testing::corridor(dlsim::testing::busy_corridor_document());
  World world{sc, sc.control, 2};
  auto const& net = world.network();
  for (int tick = 0; tick < 150; ++tick) {
    world.bus_service();
    world.inject_demand();
    auto const snap = PredictionSnapshot::build(world);
    auto const protection = protection_actions(world, snap, sc.control);
    for (std::size_t i = 0; i < net.segment_count(); ++i) {
      auto const s = net.segment_at(i);
      auto const set = build_candidates(world, s, snap, protection);
      CHECK(set.segment == s);
      for (auto const& c : set.members) {
        auto const& v = world.vehicle(c.vehicle);
        CHECK(v.cls == VehicleClass::CAV);
        CHECK(v.segment == s);
        CHECK(c.direction == (s.lane == Lane::Left ? +1 : -1));
        CHECK_FALSE(protection.banned(c.vehicle, adjacent(s)));
        if (c.direction == +1) {
          CHECK_FALSE(snap.overlaps(c.vehicle, adjacent(s)));
        }
      }
      CHECK(std::is_sorted(set.members.begin(), set.members.end(),
                           [](Candidate const& a, Candidate const& b) { return a.vehicle < b.vehicle; }));
    }
    world.step();
  }
}
