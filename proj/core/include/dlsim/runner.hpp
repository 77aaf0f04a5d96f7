#pragma once

#include "dlsim/controller.hpp"
#include "dlsim/engine.hpp"
#include "dlsim/metrics.hpp"
#include "dlsim/params.hpp"
#include "dlsim/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dlsim {

  /// A mid-run check (mass conservation, storage limits) failed.
  class RuntimeInvariantError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
  };

  struct LogOptions {
    bool events{false};
    bool decisions{false};
    bool predictions{false};
  };

  struct RunOptions {
    Strategy strategy{Strategy::Proposed};
    std::uint64_t seed{1};
    LogOptions logs;
    /// Sweep label copied into the summary row.
    std::string parameter;
    std::optional<double> value;
    /// Where partial logs go if the run aborts on an invariant violation.
    std::optional<std::filesystem::path> out_dir;
  };

  struct DecisionLogRow {
    double time{0.};
    VehicleId vehicle;
    SegmentRef segment;
    int action{0};
    bool forced{false};
    LaneChangeKind kind{LaneChangeKind::Utility};
    double utility{0.};
    double u1{0.};
    double u2{0.};
    double u3{0.};
    bool executed{false};
  };

  struct PredictionLogRow {
    double time{0.};
    SegmentRef segment;
    double inflow{0.};
    double predicted_time{0.};
    std::size_t windows{0};
    std::size_t overlapping{0};
    double conflict_inflow{0.};
    double bus_time{0.};
    bool warning{false};
  };

  struct RunResult {
    World world;
    std::vector<TripRecord> trips;
    std::vector<BusStopArrival> arrivals;
    KpiSeries series;
    RunSummary summary;
    std::vector<DecisionLogRow> decisions;
    std::vector<PredictionLogRow> predictions;
  };

  /// Runs the engine loop: motion every dt_sim, bus-window refresh every dt_b, strategy every dt.
  /// Injection stops at the horizon; the run ends when the network drains or at twice the horizon.
  RunResult simulate(Scenario const& scenario, ControlParams const& params, RunOptions const& options);

  /// Report files plus the flag-gated logs (events.csv, decisions.csv, predictions.csv).
  void write_run(std::filesystem::path const& dir, RunResult const& result, LogOptions const& logs);

  struct SweepSpec {
    std::string key;
    std::vector<double> values;
  };

  struct RunConfig {
    std::filesystem::path scenario;
    Strategy strategy{Strategy::Proposed};
    std::uint64_t seed{1};
    std::optional<double> horizon;
    std::filesystem::path out_dir{"out"};
    std::vector<std::pair<std::string, double>> overrides;
    std::optional<SweepSpec> sweep;
    LogOptions logs;
  };

  /// Applies `key = value` to the scenario horizon or the control parameters.
  void apply_setting(Scenario& scenario, std::string const& key, double value);

  /// One run, or one run per sweep value (in `<out>/<key>_<value>/`) plus `<out>/sweep_summary.csv`.
  /// Throws ScenarioError, std::invalid_argument or RuntimeInvariantError.
  std::vector<RunSummary> execute(RunConfig const& config);

  /// "%g" label used for sweep directory names.
  std::string sweep_label(std::string const& key, double value);

}  // namespace dlsim
