#include "dlsim/controller.hpp"
#include "dlsim/engine.hpp"
#include "dlsim/prediction.hpp"
#include "dlsim/routing.hpp"
#include "dlsim/runner.hpp"
#include "dlsim/scenario.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

namespace {

  dlsim::Scenario const& fixture(char const* name) {
    static auto small = dlsim::load_scenario(std::filesystem::path{DLSIM_DATA_DIR} / "desk_small.json");
    static auto large = dlsim::load_scenario(std::filesystem::path{DLSIM_DATA_DIR} / "desk_large.json");
    return std::string_view{name} == "small" ? small : large;
  }

  // World advanced into the demand peak.
  dlsim::World warmWorld(dlsim::Scenario const& sc, int ticks) {
    dlsim::World world{sc, sc.control, 1};
    for (int t = 0; t < ticks; ++t) {
      world.bus_service();
      world.inject_demand();
      world.step();
    }
    return world;
  }

  void BM_Step(benchmark::State& state) {
    auto const& sc = fixture("large");
    auto world = warmWorld(sc, 1500);
    for (auto _ : state) {
      world.bus_service();
      world.inject_demand();
      world.step();
    }
    state.counters["active"] = static_cast<double>(world.active_count());
  }
  BENCHMARK(BM_Step);

  void BM_SnapshotBuild(benchmark::State& state) {
    auto const& sc = fixture("large");
    auto const world = warmWorld(sc, 1500);
    for (auto _ : state) {
      benchmark::DoNotOptimize(dlsim::PredictionSnapshot::build(world));
    }
  }
  BENCHMARK(BM_SnapshotBuild);

  void BM_ControlStep(benchmark::State& state) {
    auto const& sc = fixture("large");
    auto const world = warmWorld(sc, 1500);
    auto const snap = dlsim::PredictionSnapshot::build(world);
    auto const protection = dlsim::protection_actions(world, snap, sc.control);
    auto const strategy = static_cast<dlsim::Strategy>(state.range(0));
    for (auto _ : state) {
      benchmark::DoNotOptimize(dlsim::strategy_step(strategy, world, snap, protection, sc.control));
    }
    state.SetLabel(std::string{dlsim::to_string(strategy)});
  }
  BENCHMARK(BM_ControlStep)->DenseRange(0, 2);

  void BM_ShortestPath(benchmark::State& state) {
    auto const& net = *fixture("large").network;
    auto const costs = dlsim::CostView::free_flow(net);
    for (auto _ : state) {
      benchmark::DoNotOptimize(
          dlsim::initial_route(net, dlsim::NodeId{1}, dlsim::NodeId{15}, dlsim::VehicleClass::CAV, costs));
    }
  }
  BENCHMARK(BM_ShortestPath);

  void BM_SimulateSmall(benchmark::State& state) {
    auto const& sc = fixture("small");
    dlsim::RunOptions opts;
    opts.strategy = static_cast<dlsim::Strategy>(state.range(0));
    for (auto _ : state) {
      benchmark::DoNotOptimize(dlsim::simulate(sc, sc.control, opts));
    }
    state.SetLabel(std::string{dlsim::to_string(opts.strategy)});
  }
  BENCHMARK(BM_SimulateSmall)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
