#include "dlsim/runner.hpp"

#include "dlsim/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace dlsim {

  namespace {
    std::uint64_t ticksPer(double interval, double dtSim) {
      return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(interval / dtSim)));
    }

    void writeLogs(std::filesystem::path const& dir,
                   World const& world,
                   std::vector<DecisionLogRow> const& decisions,
                   std::vector<PredictionLogRow> const& predictions,
                   LogOptions const& logs) {
      std::filesystem::create_directories(dir);
      if (logs.events) {
        CsvWriter w{dir / "events.csv"};
        w.row({"time", "type", "vehicle", "class", "segment", "position"});
        for (auto const& e : world.events()) {
          w.field(e.time).field(to_string(e.type)).field(static_cast<std::size_t>(e.vehicle.value));
          w.field(to_string(e.cls)).field(std::string_view{segment_label(e.segment)}).field(e.position);
          w.end_row();
        }
      }
      if (logs.decisions) {
        CsvWriter w{dir / "decisions.csv"};
        w.row({"time", "vehicle", "segment", "action", "forced", "kind", "utility", "u1", "u2", "u3", "executed"});
        for (auto const& d : decisions) {
          w.field(d.time).field(static_cast<std::size_t>(d.vehicle.value)).field(std::string_view{segment_label(d.segment)});
          w.field(d.action).field(d.forced).field(to_string(d.kind)).field(d.utility).field(d.u1).field(d.u2);
          w.field(d.u3).field(d.executed);
          w.end_row();
        }
      }
      if (logs.predictions) {
        CsvWriter w{dir / "predictions.csv"};
        w.row({"time", "segment", "inflow", "predicted_time", "windows", "overlapping", "conflict_inflow", "bus_time",
               "warning"});
        for (auto const& p : predictions) {
          w.field(p.time).field(std::string_view{segment_label(p.segment)}).field(p.inflow).field(p.predicted_time);
          w.field(p.windows).field(p.overlapping).field(p.conflict_inflow).field(p.bus_time).field(p.warning);
          w.end_row();
        }
      }
    }

    RunSummary summarize(World const& world,
                         std::vector<TripRecord> const& trips,
                         std::vector<BusStopArrival> const& arrivals,
                         RunOptions const& options) {
      RunSummary s;
      s.parameter = options.parameter;
      s.value = options.value;
      s.strategy = std::string(to_string(options.strategy));
      s.seed = options.seed;
      s.end_time = world.time();
      s.injected = world.counts().injected;
      for (auto const& t : trips) {
        ++s.completed[static_cast<std::size_t>(t.cls)];
      }
      for (std::size_t c = 0; c < 3; ++c) {
        s.active_at_end[c] = s.injected[c] - s.completed[c];
      }
      s.bus_arrivals = arrivals.size();
      s.bus_on_time_rate = on_time_rate(arrivals);
      s.avg_cav_travel_time = avg_completed_travel_time(trips, VehicleClass::CAV, world.time());
      s.avg_hdv_travel_time = avg_completed_travel_time(trips, VehicleClass::HDV, world.time());
      s.avg_bus_travel_time = avg_completed_travel_time(trips, VehicleClass::Bus, world.time());
      if (!arrivals.empty()) {
        double total = 0.;
        for (auto const& a : arrivals) {
          total += a.delay;
        }
        s.mean_bus_delay = total / static_cast<double>(arrivals.size());
      }
      for (auto const& c : world.lane_changes()) {
        ++s.lane_changes;
        switch (c.kind) {
          case LaneChangeKind::Utility:
            ++s.utility_changes;
            break;
          case LaneChangeKind::Forced:
            ++s.forced_changes;
            break;
          case LaneChangeKind::Myopic:
            ++s.myopic_changes;
            break;
          case LaneChangeKind::Mandatory:
            ++s.mandatory_changes;
            break;
        }
      }
      for (auto const& v : world.vehicles()) {
        s.reroutes += static_cast<std::size_t>(v.reroute_count);
      }
      return s;
    }
  }  // namespace

  RunResult simulate(Scenario const& scenario, ControlParams const& params, RunOptions const& options) {
    World world{scenario, params, options.seed};
    world.enable_event_log(options.logs.events);
    auto const& net = world.network();
    auto const strategy = options.strategy;
    bool const protect = strategy != Strategy::DRP;

    PredictionSnapshot snapshot;
    ProtectionResult protection;
    std::vector<DecisionLogRow> decisions;
    std::vector<PredictionLogRow> predictions;
    KpiSeries series;
    RunSummary audit;

    // A CAV moving into DL segment s from a general lane (or from outside the network) is covered
    // when s is warned and either its forecast overlaps a bus window on s or the current instant
    // lies inside one. Continuing along the dedicated lane across a node is not an entry.
    auto covered = [&](VehicleState const& v, SegmentRef from, SegmentRef s) {
      if (v.cls != VehicleClass::CAV || !net.is_dl(s) || !protection.warning(s)) {
        return false;
      }
      if (from.edge.valid() && from.edge != s.edge && net.is_dl(from)) {
        return false;
      }
      if (snapshot.overlaps(v.id, s)) {
        return true;
      }
      auto const rel = world.time() - snapshot.bus_time_stamp();
      auto const& windows = snapshot.at(s).windows;
      return std::any_of(windows.begin(), windows.end(), [&](BusWindow const& w) { return w.window.contains(rel); });
    };

    if (protect) {
      world.set_entry_guard([&](VehicleState const& v, SegmentRef s) { return covered(v, v.segment, s); });
    }
    world.set_dl_entry_observer([&](VehicleState const& v, SegmentRef from, SegmentRef to) {
      if (covered(v, from, to)) {
        ++audit.protected_entry_violations;
      }
    });
    if (strategy == Strategy::Proposed) {
      world.set_lane_policy(std::make_shared<PredictiveEntryPolicy>(&snapshot));
    } else {
      world.set_lane_policy(std::make_shared<MyopicEntryPolicy>());
    }

    auto const controlTicks = ticksPer(params.dt, params.dt_sim);
    auto const busTicks = ticksPer(params.dt_bus, params.dt_sim);
    auto const horizon = scenario.horizon;
    auto const cap = 2. * horizon;

    std::map<VehicleId, SegmentRef> pendingForced;

    auto logAction = [&](LaneAction const& a, bool executed) {
      if (options.logs.decisions) {
        decisions.push_back(
            {world.time(), a.vehicle, a.from, a.direction, a.forced, a.kind, a.utility, a.u1, a.u2, a.u3, executed});
      }
    };

    auto tryForced = [&](VehicleId id, SegmentRef s) {
      auto const& v = world.vehicle(id);
      if (!v.active() || v.segment != s) {
        return false;
      }
      return world.execute_lane_change(id, -1, LaneChangeKind::Forced);
    };

    auto finish = [&]() {
      world.set_entry_guard(nullptr);
      world.set_dl_entry_observer(nullptr);
      world.set_lane_policy(std::make_shared<FewestVehiclesPolicy>());
    };

    try {
      while (true) {
        auto const tick = world.tick();
        world.bus_service();
        world.inject_demand();

        bool const control = tick % controlTicks == 0;
        bool const busRefresh = tick % busTicks == 0;
        if (control) {
          snapshot.refresh_flow(world);
        }
        if (control || busRefresh) {
          snapshot.refresh_bus(world);
          protection = protection_actions(world, snapshot, params);
          audit.warning_steps += protection.warned.size();
          if (protect) {
            for (auto const& f : protection.forced) {
              if (pendingForced.contains(f.vehicle)) {
                continue;
              }
              ++audit.forced_obligations;
              bool const done = tryForced(f.vehicle, f.from);
              logAction(f, done);
              if (done) {
                ++audit.forced_executed;
              } else {
                pendingForced.emplace(f.vehicle, f.from);
              }
            }
          }
        }

        if (control) {
          auto const decision = strategy_step(strategy, world, snapshot, protection, params);
          for (auto const& r : decision.reroutes) {
            world.apply_route(r.vehicle, r.route);
          }
          for (auto const& a : decision.actions) {
            if (a.forced) {
              continue;
            }
            auto const& v = world.vehicle(a.vehicle);
            bool const executed = v.active() && v.segment == a.from && world.execute_lane_change(a.vehicle, a.direction, a.kind);
            logAction(a, executed);
          }
          audit.unresolved_escalations += decision.unresolved.size();
          world.set_routing_costs(strategy == Strategy::DRP ? instantaneous_costs(world, VehicleClass::CAV)
                                                            : snapshot.costs(VehicleClass::CAV));
          if (options.logs.predictions) {
            for (std::size_t i = 0; i < net.segment_count(); ++i) {
              auto const s = net.segment_at(i);
              auto const& f = snapshot.at(s);
              predictions.push_back({world.time(), s, f.inflow, f.predicted_time, f.windows.size(), f.overlapping.size(),
                                     f.conflict_inflow, f.bus_time, protection.warning(s)});
            }
          }
          series.push_back(sample_kpis(world));
        }

        for (auto it = pendingForced.begin(); it != pendingForced.end();) {
          auto const& v = world.vehicle(it->first);
          if (!v.active() || v.segment != it->second || !protection.warning(it->second)) {
            ++audit.forced_lapsed;
            it = pendingForced.erase(it);
          } else if (tryForced(it->first, it->second)) {
            ++audit.forced_executed;
            it = pendingForced.erase(it);
          } else {
            ++it;
          }
        }

        world.step();

        if (!world.conserved()) {
          throw RuntimeInvariantError{"vehicle conservation violated at t=" + format_fixed(world.time())};
        }
        if (world.max_overfill() > 0) {
          throw RuntimeInvariantError{"segment storage exceeded at t=" + format_fixed(world.time())};
        }
        if ((world.time() >= horizon && world.drained()) || world.time() >= cap) {
          break;
        }
      }
    } catch (RuntimeInvariantError const&) {
      finish();
      if (options.out_dir) {
        writeLogs(*options.out_dir, world, decisions, predictions, options.logs);
      }
      throw;
    }
    finish();
    series.push_back(sample_kpis(world));

    auto trips = collect_trips(world);
    auto arrivals = classify_arrivals(world.stop_arrivals(), params.on_time_tolerance);
    auto summary = summarize(world, trips, arrivals, options);
    summary.protected_entry_violations = audit.protected_entry_violations;
    summary.forced_obligations = audit.forced_obligations;
    summary.forced_executed = audit.forced_executed;
    summary.forced_lapsed = audit.forced_lapsed + pendingForced.size();
    summary.warning_steps = audit.warning_steps;
    summary.unresolved_escalations = audit.unresolved_escalations;

    return RunResult{std::move(world),  std::move(trips),     std::move(arrivals),  std::move(series),
                     std::move(summary), std::move(decisions), std::move(predictions)};
  }

  void write_run(std::filesystem::path const& dir, RunResult const& result, LogOptions const& logs) {
    write_reports(dir, result.world, result.trips, result.arrivals, result.series, result.summary);
    writeLogs(dir, result.world, result.decisions, result.predictions, logs);
  }

  void apply_setting(Scenario& scenario, std::string const& key, double value) {
    if (key == "horizon") {
      if (!(value > 0.) || !std::isfinite(value)) {
        throw std::invalid_argument{"horizon must be positive"};
      }
      scenario.horizon = value;
      return;
    }
    scenario.control.set(key, value);
  }

  std::string sweep_label(std::string const& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", value);
    return key + "_" + buf;
  }

  std::vector<RunSummary> execute(RunConfig const& config) {
    auto base = load_scenario(config.scenario);
    if (config.horizon) {
      apply_setting(base, "horizon", *config.horizon);
    }
    for (auto const& [key, value] : config.overrides) {
      apply_setting(base, key, value);
    }
    base.control.validate();

    RunOptions options;
    options.strategy = config.strategy;
    options.seed = config.seed;
    options.logs = config.logs;

    std::vector<RunSummary> rows;
    if (!config.sweep) {
      options.out_dir = config.out_dir;
      auto result = simulate(base, base.control, options);
      write_run(config.out_dir, result, config.logs);
      rows.push_back(result.summary);
      return rows;
    }

    auto values = config.sweep->values;
    std::stable_sort(values.begin(), values.end());
    for (auto v : values) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument{"sweep values must be finite"};
      }
    }
    for (auto v : values) {
      auto scenario = base;
      apply_setting(scenario, config.sweep->key, v);
      scenario.control.validate();
      auto const dir = config.out_dir / sweep_label(config.sweep->key, v);
      options.parameter = config.sweep->key;
      options.value = v;
      options.out_dir = dir;
      auto result = simulate(scenario, scenario.control, options);
      write_run(dir, result, config.logs);
      rows.push_back(result.summary);
    }
    std::filesystem::create_directories(config.out_dir);
    write_summary(config.out_dir / "sweep_summary.csv", rows);
    return rows;
  }

}  // namespace dlsim
