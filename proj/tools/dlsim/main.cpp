#include "dlsim/controller.hpp"
#include "dlsim/network.hpp"
#include "dlsim/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

  constexpr int kOk = 0;
  constexpr int kUsage = 1;
  constexpr int kValidation = 2;
  constexpr int kRuntime = 3;

  std::pair<std::string, std::string> splitKeyValue(std::string const& text, char const* flag) {
    auto const eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError{flag, "expected KEY=VALUE, got '" + text + "'"};
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
  }

  double parseNumber(std::string const& text, char const* flag) {
    std::size_t used = 0;
    double value = 0.;
    try {
      value = std::stod(text, &used);
    } catch (std::exception const&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw CLI::ValidationError{flag, "'" + text + "' is not a number"};
    }
    return value;
  }

  // Bare names ("desk_small") resolve against the bundled data directory.
  std::filesystem::path resolveScenario(std::string const& name) {
    std::filesystem::path p{name};
    if (std::filesystem::exists(p)) {
      return p;
    }
    std::vector<std::filesystem::path> roots;
    if (auto const* env = std::getenv("DLSIM_DATA_DIR")) {
      roots.emplace_back(env);
    }
    roots.emplace_back(DLSIM_DATA_DIR);
    for (auto const& root : roots) {
      for (auto const& candidate : {root / p, root / (name + ".json")}) {
        if (std::filesystem::exists(candidate)) {
          return candidate;
        }
      }
    }
    return p;
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesoscopic dedicated-lane corridor simulator"};
  app.set_version_flag("--version", "dlsim 0.1.0");

  std::string scenario;
  std::string strategy = "proposed";
  std::uint64_t seed = 1;
  std::optional<double> horizon;
  std::string out;
  std::vector<std::string> sets;
  std::string sweep;
  dlsim::LogOptions logs;

  app.add_option("--scenario", scenario, "Scenario file or bundled preset name")->required();
  app.add_option("--strategy", strategy, "drp, prp or proposed")->capture_default_str();
  app.add_option("--seed", seed, "Demand seed")->capture_default_str();
  app.add_option("--horizon", horizon, "Injection horizon in seconds");
  app.add_option("--out", out, "Output directory (default: $DLSIM_OUT_DIR or ./out)");
  app.add_option("--set", sets, "Parameter override KEY=VALUE (repeatable)");
  app.add_option("--sweep", sweep, "Parameter sweep KEY=v1,v2,...");
  app.add_flag("--log-events", logs.events, "Write events.csv");
  app.add_flag("--log-decisions", logs.decisions, "Write decisions.csv");
  app.add_flag("--log-predictions", logs.predictions, "Write predictions.csv");

  dlsim::RunConfig config;
  try {
    app.parse(argc, argv);
    config.strategy = dlsim::parse_strategy(strategy);
    for (auto const& s : sets) {
      auto [key, value] = splitKeyValue(s, "--set");
      config.overrides.emplace_back(key, parseNumber(value, "--set"));
    }
    if (!sweep.empty()) {
      auto [key, list] = splitKeyValue(sweep, "--sweep");
      dlsim::SweepSpec spec{key, {}};
      std::stringstream ss{list};
      std::string item;
      while (std::getline(ss, item, ',')) {
        spec.values.push_back(parseNumber(item, "--sweep"));
      }
      if (spec.values.empty()) {
        throw CLI::ValidationError{"--sweep", "no values given"};
      }
      config.sweep = std::move(spec);
    }
  } catch (CLI::ParseError const& e) {
    auto const code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (std::invalid_argument const& e) {
    std::cerr << "dlsim: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  if (out.empty()) {
    auto const* env = std::getenv("DLSIM_OUT_DIR");
    out = env != nullptr && *env != '\0' ? env : "out";
  }
  config.scenario = resolveScenario(scenario);
  config.seed = seed;
  config.horizon = horizon;
  config.out_dir = out;
  config.logs = logs;

  try {
    auto const rows = dlsim::execute(config);
    for (auto const& r : rows) {
      std::cout << r.strategy;
      if (!r.parameter.empty()) {
        std::cout << " " << r.parameter << "=" << dlsim::format_fixed(*r.value);
      }
      std::cout << " seed=" << r.seed << " on_time="
                << (r.bus_on_time_rate ? dlsim::format_fixed(*r.bus_on_time_rate) : std::string{"n/a"})
                << " lane_changes=" << r.lane_changes << " violations=" << r.protected_entry_violations << "\n";
    }
    std::cout << "reports written to " << config.out_dir.string() << "\n";
  } catch (dlsim::ScenarioError const& e) {
    std::cerr << "dlsim: " << e.what() << "\n";
    return kValidation;
  } catch (std::invalid_argument const& e) {
    std::cerr << "dlsim: " << e.what() << "\n";
    return kValidation;
  } catch (dlsim::RuntimeInvariantError const& e) {
    std::cerr << "dlsim: runtime invariant violated: " << e.what() << "\n";
    return kRuntime;
  } catch (std::exception const& e) {
    std::cerr << "dlsim: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
