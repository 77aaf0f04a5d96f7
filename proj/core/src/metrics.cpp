#include "dlsim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace dlsim {

  bool is_on_time(double delay, double tolerance) { return delay <= tolerance; }

  std::vector<BusStopArrival> classify_arrivals(std::span<StopArrivalRecord const> records, double tolerance) {
    std::vector<BusStopArrival> out;
    out.reserve(records.size());
    for (auto const& r : records) {
      auto const delay = r.actual - r.scheduled;
      out.push_back({r.line, r.trip, r.stop, r.bus, r.scheduled, r.actual, delay, r.departure, is_on_time(delay, tolerance)});
    }
    return out;
  }

  std::optional<double> on_time_rate(StopId stop, std::span<BusStopArrival const> arrivals) {
    std::size_t n = 0;
    std::size_t ok = 0;
    for (auto const& a : arrivals) {
      if (a.stop == stop) {
        ++n;
        ok += a.on_time ? 1 : 0;
      }
    }
    if (n == 0) {
      return std::nullopt;
    }
    return 100. * static_cast<double>(ok) / static_cast<double>(n);
  }

  std::optional<double> on_time_rate(std::span<BusStopArrival const> arrivals) {
    if (arrivals.empty()) {
      return std::nullopt;
    }
    auto const ok = std::count_if(arrivals.begin(), arrivals.end(), [](BusStopArrival const& a) { return a.on_time; });
    return 100. * static_cast<double>(ok) / static_cast<double>(arrivals.size());
  }

  std::optional<double> avg_completed_travel_time(std::span<TripRecord const> trips, VehicleClass cls, double upTo) {
    double sum = 0.;
    std::size_t n = 0;
    for (auto const& t : trips) {
      if (t.cls == cls && t.arrival_time <= upTo) {
        sum += t.travel_time;
        ++n;
      }
    }
    if (n == 0) {
      return std::nullopt;
    }
    return sum / static_cast<double>(n);
  }

  std::size_t cumulative_lane_changes(std::span<LaneChangeRecord const> changes, double upTo) {
    return static_cast<std::size_t>(
        std::count_if(changes.begin(), changes.end(), [&](LaneChangeRecord const& c) { return c.time <= upTo; }));
  }

  std::vector<TripRecord> collect_trips(World const& world) {
    std::vector<TripRecord> out;
    for (auto const& v : world.vehicles()) {
      if (v.status != VehicleStatus::Retired || !v.arrival_time) {
        continue;
      }
      out.push_back({v.id, v.cls, v.depart_time, *v.arrival_time, *v.arrival_time - v.depart_time,
                     static_cast<int>(v.lane_change_log.size()), v.reroute_count});
    }
    return out;
  }

  double cumulative_bus_travel_time(World const& world) {
    auto const now = world.time();
    double total = 0.;
    for (auto const& v : world.vehicles()) {
      if (v.cls == VehicleClass::Bus) {
        total += v.arrival_time.value_or(now) - v.depart_time;
      }
    }
    return total;
  }

  KpiSample sample_kpis(World const& world) {
    KpiSample s;
    s.time = world.time();
    s.cumulative_bus_travel_time = cumulative_bus_travel_time(world);
    auto const trips = collect_trips(world);
    s.avg_cav_travel_time = avg_completed_travel_time(trips, VehicleClass::CAV, s.time);
    s.avg_hdv_travel_time = avg_completed_travel_time(trips, VehicleClass::HDV, s.time);
    s.cumulative_cav_lane_changes = cumulative_lane_changes(world.lane_changes(), s.time);
    return s;
  }

  std::string format_fixed(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
  }

  CsvWriter::CsvWriter(std::filesystem::path const& path) : m_out{path, std::ios::binary | std::ios::trunc} {
    if (!m_out) {
      throw std::runtime_error{"cannot write " + path.string()};
    }
  }

  CsvWriter& CsvWriter::field(std::string_view text) {
    if (!m_first) {
      m_out << ',';
    }
    m_first = false;
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
      m_out << text;
      return *this;
    }
    m_out << '"';
    for (char c : text) {
      if (c == '"') {
        m_out << '"';
      }
      m_out << c;
    }
    m_out << '"';
    return *this;
  }

  CsvWriter& CsvWriter::field(double value) { return field(std::string_view{format_fixed(value)}); }

  CsvWriter& CsvWriter::field(std::optional<double> value) {
    return value ? field(*value) : field(std::string_view{});
  }

  CsvWriter& CsvWriter::field(std::size_t value) { return field(std::string_view{std::to_string(value)}); }

  CsvWriter& CsvWriter::field(int value) { return field(std::string_view{std::to_string(value)}); }

  CsvWriter& CsvWriter::field(bool value) { return field(std::string_view{value ? "1" : "0"}); }

  void CsvWriter::row(std::initializer_list<std::string_view> fields) {
    for (auto f : fields) {
      field(f);
    }
    end_row();
  }

  void CsvWriter::end_row() {
    m_out << "\r\n";
    m_first = true;
    if (!m_out) {
      throw std::runtime_error{"CSV write failed"};
    }
  }

  std::string segment_label(SegmentRef s) {
    return std::to_string(s.edge.value) + ":" + std::string(to_string(s.lane)) + std::to_string(s.m);
  }

  std::vector<StopSummary> summarize_stops(World const& world, std::span<BusStopArrival const> arrivals) {
    std::vector<StopSummary> out;
    for (auto const& stop : world.network().stops()) {
      StopSummary s;
      s.stop = stop.id;
      for (auto const& a : arrivals) {
        if (a.stop == stop.id) {
          ++s.arrivals;
          s.on_time += a.on_time ? 1 : 0;
        }
      }
      s.rate = on_time_rate(stop.id, arrivals);
      out.push_back(s);
    }
    return out;
  }

  void write_summary(std::filesystem::path const& path, std::span<RunSummary const> rows) {
    CsvWriter w{path};
    w.row({"parameter", "value", "strategy", "seed", "end_time", "cav_injected", "cav_completed", "cav_active",
           "hdv_injected", "hdv_completed", "hdv_active", "bus_injected", "bus_completed", "bus_active",
           "bus_arrivals", "bus_on_time_pct", "avg_cav_travel_time", "avg_hdv_travel_time", "avg_bus_travel_time",
           "mean_bus_delay", "lane_changes", "utility_changes", "forced_changes", "myopic_changes",
           "mandatory_changes", "reroutes", "protected_entry_violations", "forced_obligations", "forced_executed",
           "forced_lapsed", "warning_steps", "unresolved_escalations"});
    for (auto const& r : rows) {
      w.field(std::string_view{r.parameter}).field(r.value).field(std::string_view{r.strategy});
      w.field(std::string_view{std::to_string(r.seed)}).field(r.end_time);
      for (auto c : {VehicleClass::CAV, VehicleClass::HDV, VehicleClass::Bus}) {
        auto const k = static_cast<std::size_t>(c);
        w.field(r.injected[k]).field(r.completed[k]).field(r.active_at_end[k]);
      }
      w.field(r.bus_arrivals).field(r.bus_on_time_rate).field(r.avg_cav_travel_time).field(r.avg_hdv_travel_time);
      w.field(r.avg_bus_travel_time).field(r.mean_bus_delay).field(r.lane_changes).field(r.utility_changes);
      w.field(r.forced_changes).field(r.myopic_changes).field(r.mandatory_changes).field(r.reroutes);
      w.field(r.protected_entry_violations).field(r.forced_obligations).field(r.forced_executed);
      w.field(r.forced_lapsed).field(r.warning_steps).field(r.unresolved_escalations);
      w.end_row();
    }
  }

  void write_reports(std::filesystem::path const& dir,
                     World const& world,
                     std::span<TripRecord const> trips,
                     std::span<BusStopArrival const> arrivals,
                     KpiSeries const& series,
                     RunSummary const& summary) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      throw std::runtime_error{"cannot create output directory " + dir.string() + ": " + ec.message()};
    }
    {
      CsvWriter w{dir / "trips.csv"};
      w.row({"vehicle", "class", "depart_time", "arrival_time", "travel_time", "lane_changes", "reroutes"});
      for (auto const& t : trips) {
        w.field(static_cast<std::size_t>(t.vehicle.value)).field(to_string(t.cls)).field(t.depart_time);
        w.field(t.arrival_time).field(t.travel_time).field(t.lane_change_count).field(t.reroute_count);
        w.end_row();
      }
    }
    {
      CsvWriter w{dir / "bus_arrivals.csv"};
      w.row({"line", "trip", "bus", "stop", "scheduled", "actual", "delay", "departure", "on_time"});
      for (auto const& a : arrivals) {
        w.field(static_cast<std::size_t>(a.line.value)).field(a.trip).field(static_cast<std::size_t>(a.bus.value));
        w.field(static_cast<std::size_t>(a.stop.value)).field(a.scheduled).field(a.actual).field(a.delay);
        w.field(a.departure >= 0. ? std::optional{a.departure} : std::nullopt).field(a.on_time);
        w.end_row();
      }
    }
    {
      CsvWriter w{dir / "stop_on_time.csv"};
      w.row({"stop", "arrivals", "on_time", "on_time_pct"});
      for (auto const& s : summarize_stops(world, arrivals)) {
        w.field(static_cast<std::size_t>(s.stop.value)).field(s.arrivals).field(s.on_time).field(s.rate);
        w.end_row();
      }
    }
    {
      CsvWriter w{dir / "timeseries.csv"};
      w.row({"time", "cumulative_bus_travel_time", "avg_cav_travel_time", "avg_hdv_travel_time",
             "cumulative_cav_lane_changes"});
      for (auto const& s : series) {
        w.field(s.time).field(s.cumulative_bus_travel_time).field(s.avg_cav_travel_time);
        w.field(s.avg_hdv_travel_time).field(s.cumulative_cav_lane_changes);
        w.end_row();
      }
    }
    {
      CsvWriter w{dir / "lane_changes.csv"};
      w.row({"time", "vehicle", "from", "to", "direction", "kind"});
      for (auto const& c : world.lane_changes()) {
        w.field(c.time).field(static_cast<std::size_t>(c.vehicle.value)).field(std::string_view{segment_label(c.from)});
        w.field(std::string_view{segment_label(c.to)}).field(c.direction).field(to_string(c.kind));
        w.end_row();
      }
    }
    write_summary(dir / "summary.csv", std::span{&summary, 1});
  }

}  // namespace dlsim
