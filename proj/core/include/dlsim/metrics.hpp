#pragma once

#include "dlsim/engine.hpp"
#include "dlsim/ids.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dlsim {

  struct TripRecord {
    VehicleId vehicle;
    VehicleClass cls{VehicleClass::HDV};
    double depart_time{0.};
    double arrival_time{0.};
    double travel_time{0.};
    int lane_change_count{0};
    int reroute_count{0};
  };

  struct BusStopArrival {
    BusLineId line;
    std::size_t trip{0};
    StopId stop;
    VehicleId bus;
    double scheduled{0.};
    double actual{0.};
    double delay{0.};
    double departure{-1.};
    bool on_time{false};
  };

  struct KpiSample {
    double time{0.};
    double cumulative_bus_travel_time{0.};
    std::optional<double> avg_cav_travel_time;
    std::optional<double> avg_hdv_travel_time;
    std::size_t cumulative_cav_lane_changes{0};
  };

  using KpiSeries = std::vector<KpiSample>;

  /// delay <= tolerance; early arrivals are on time.
  bool is_on_time(double delay, double tolerance);

  std::vector<BusStopArrival> classify_arrivals(std::span<StopArrivalRecord const> records, double tolerance);

  /// Percentage of on-time arrivals at `stop`; nullopt when the stop saw no arrival.
  std::optional<double> on_time_rate(StopId stop, std::span<BusStopArrival const> arrivals);
  /// Percentage over all stops.
  std::optional<double> on_time_rate(std::span<BusStopArrival const> arrivals);

  /// Mean travel time of trips of `cls` with arrival_time <= upTo.
  std::optional<double> avg_completed_travel_time(std::span<TripRecord const> trips, VehicleClass cls, double upTo);

  /// Lane changes with timestamp <= upTo.
  std::size_t cumulative_lane_changes(std::span<LaneChangeRecord const> changes, double upTo);

  /// Trip records for every retired vehicle, ordered by vehicle id.
  std::vector<TripRecord> collect_trips(World const& world);

  /// Bus time spent in the network up to the current instant, completed and running trips alike.
  double cumulative_bus_travel_time(World const& world);

  KpiSample sample_kpis(World const& world);

  /// "%.6f"
  std::string format_fixed(double value);

  /// Minimal RFC-4180 writer: fields containing a comma, quote or line break are quoted.
  class CsvWriter {
  public:
    explicit CsvWriter(std::filesystem::path const& path);

    CsvWriter& field(std::string_view text);
    CsvWriter& field(double value);
    CsvWriter& field(std::optional<double> value);
    CsvWriter& field(std::size_t value);
    CsvWriter& field(int value);
    CsvWriter& field(bool value);
    void row(std::initializer_list<std::string_view> fields);
    void end_row();

  private:
    std::ofstream m_out;
    bool m_first{true};
  };

  std::string segment_label(SegmentRef s);

  struct StopSummary {
    StopId stop;
    std::size_t arrivals{0};
    std::size_t on_time{0};
    std::optional<double> rate;
  };

  std::vector<StopSummary> summarize_stops(World const& world, std::span<BusStopArrival const> arrivals);

  struct RunSummary {
    std::string parameter;  // sweep key, empty for a plain run
    std::optional<double> value;
    std::string strategy;
    std::uint64_t seed{0};
    double end_time{0.};
    std::array<std::size_t, 3> injected{};
    std::array<std::size_t, 3> completed{};
    std::array<std::size_t, 3> active_at_end{};
    std::size_t bus_arrivals{0};
    std::optional<double> bus_on_time_rate;
    std::optional<double> avg_cav_travel_time;
    std::optional<double> avg_hdv_travel_time;
    std::optional<double> avg_bus_travel_time;
    double mean_bus_delay{0.};
    std::size_t lane_changes{0};
    std::size_t utility_changes{0};
    std::size_t forced_changes{0};
    std::size_t myopic_changes{0};
    std::size_t mandatory_changes{0};
    std::size_t reroutes{0};
    std::size_t protected_entry_violations{0};
    std::size_t forced_obligations{0};
    std::size_t forced_executed{0};
    std::size_t forced_lapsed{0};
    std::size_t warning_steps{0};
    std::size_t unresolved_escalations{0};
  };

  void write_summary(std::filesystem::path const& path, std::span<RunSummary const> rows);

  /// trips.csv, bus_arrivals.csv, stop_on_time.csv, timeseries.csv, lane_changes.csv, summary.csv.
  /// Throws std::runtime_error when the directory cannot be created or written.
  void write_reports(std::filesystem::path const& dir,
                     World const& world,
                     std::span<TripRecord const> trips,
                     std::span<BusStopArrival const> arrivals,
                     KpiSeries const& series,
                     RunSummary const& summary);

}  // namespace dlsim
