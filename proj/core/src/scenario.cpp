#include "dlsim/scenario.hpp"

#include "dlsim/routing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dlsim {

  namespace {
    using json = nlohmann::json;

    // Default jam spacing per stored vehicle, meters.
    constexpr double kJamSpacing = 7.5;

    [[noreturn]] void parseError(std::string const& source, std::string const& where, std::string const& what) {
      throw ScenarioError{ScenarioError::Kind::Parse, source + ": " + where + ": " + what};
    }

    [[noreturn]] void validationError(std::string const& source, std::string const& what) {
      throw ScenarioError{ScenarioError::Kind::Validation, source + ": " + what};
    }

    /// Field access with a JSON-path-like location for error messages.
    class Reader {
    public:
      Reader(json const& node, std::string path, std::string const& source)
          : m_node{node}, m_path{std::move(path)}, m_source{source} {}

      bool has(char const* key) const { return m_node.is_object() && m_node.contains(key); }

      Reader at(char const* key) const {
        if (!m_node.is_object() || !m_node.contains(key)) {
          parseError(m_source, m_path, std::string{"missing field '"} + key + "'");
        }
        return Reader{m_node.at(key), m_path + "." + key, m_source};
      }

      Reader at(std::size_t i) const { return Reader{m_node.at(i), m_path + "[" + std::to_string(i) + "]", m_source}; }

      std::size_t size() const {
        if (!m_node.is_array()) {
          parseError(m_source, m_path, "expected an array");
        }
        return m_node.size();
      }

      double number() const {
        if (!m_node.is_number()) {
          parseError(m_source, m_path, "expected a number");
        }
        return m_node.get<double>();
      }

      double number(char const* key, double fallback) const { return has(key) ? at(key).number() : fallback; }

      std::uint32_t id() const {
        if (!m_node.is_number_integer() || m_node.get<std::int64_t>() < 0 ||
            m_node.get<std::int64_t>() >= static_cast<std::int64_t>(UINT32_MAX)) {
          parseError(m_source, m_path, "expected a non-negative integer id");
        }
        return static_cast<std::uint32_t>(m_node.get<std::int64_t>());
      }

      bool boolean() const {
        if (!m_node.is_boolean()) {
          parseError(m_source, m_path, "expected a boolean");
        }
        return m_node.get<bool>();
      }

      std::string string() const {
        if (!m_node.is_string()) {
          parseError(m_source, m_path, "expected a string");
        }
        return m_node.get<std::string>();
      }

      bool is_object() const { return m_node.is_object(); }
      bool is_array() const { return m_node.is_array(); }
      json const& raw() const { return m_node; }
      std::string const& path() const { return m_path; }
      [[noreturn]] void fail(std::string const& what) const { parseError(m_source, m_path, what); }

    private:
      json const& m_node;
      std::string m_path;
      std::string const& m_source;
    };

    Lane parseLane(Reader const& r) {
      auto s = r.string();
      if (s == "L" || s == "left" || s == "Left") {
        return Lane::Left;
      }
      if (s == "R" || s == "right" || s == "Right") {
        return Lane::Right;
      }
      r.fail("unknown lane '" + s + "'");
    }

    VehicleClass parseClass(Reader const& r) {
      auto s = r.string();
      if (s == "cav" || s == "CAV") {
        return VehicleClass::CAV;
      }
      if (s == "hdv" || s == "HDV") {
        return VehicleClass::HDV;
      }
      r.fail("demand class must be 'cav' or 'hdv', got '" + s + "'");
    }

    double flowToPerSecond(Reader const& edge, double value) {
      if (!edge.has("capacity_unit")) {
        return value;
      }
      auto unit = edge.at("capacity_unit").string();
      if (unit == "veh/s") {
        return value;
      }
      if (unit == "veh/h") {
        return value / 3600.;
      }
      edge.at("capacity_unit").fail("unknown unit '" + unit + "' (expected veh/s or veh/h)");
    }

    Edge parseEdge(Reader const& r) {
      Edge e;
      e.id = EdgeId{r.at("id").id()};
      e.from = NodeId{r.at("from").id()};
      e.to = NodeId{r.at("to").id()};
      e.length = r.at("length").number();
      e.free_flow_speed = r.at("free_flow_speed").number();
      e.right_lane_is_dl = r.has("dl") ? r.at("dl").boolean() : false;
      auto const cap = flowToPerSecond(r, r.at("capacity").number());
      e.capacity = {cap, cap};
      if (r.has("dl_capacity")) {
        if (!e.right_lane_is_dl) {
          r.at("dl_capacity").fail("dl_capacity given for an edge without a dedicated lane");
        }
        e.capacity[static_cast<std::size_t>(Lane::Right)] = flowToPerSecond(r, r.at("dl_capacity").number());
      }
      auto const defaultJam = static_cast<int>(std::ceil(e.length / 2. / kJamSpacing - 1e-9));
      e.jam_count = {std::max(1, defaultJam), std::max(1, defaultJam)};
      if (r.has("jam_count")) {
        auto j = r.at("jam_count");
        if (j.is_array()) {
          if (j.size() != 2) {
            j.fail("jam_count array must have two entries [left, right]");
          }
          e.jam_count = {static_cast<int>(j.at(std::size_t{0}).id()), static_cast<int>(j.at(std::size_t{1}).id())};
        } else {
          auto const v = static_cast<int>(j.id());
          e.jam_count = {v, v};
        }
      }
      return e;
    }

    DemandEntry parseDemand(Reader const& r, std::size_t index) {
      DemandEntry d;
      d.origin = NodeId{r.at("origin").id()};
      d.destination = NodeId{r.at("destination").id()};
      d.cls = parseClass(r.at("class"));
      d.seed = r.has("seed") ? r.at("seed").id() : index;
      if (r.has("times")) {
        d.process = DemandEntry::Process::Deterministic;
        auto times = r.at("times");
        for (std::size_t i = 0; i < times.size(); ++i) {
          auto const t = times.at(i).number();
          if (!(t >= 0.)) {
            times.at(i).fail("departure time must be >= 0");
          }
          d.times.push_back(t);
        }
        std::sort(d.times.begin(), d.times.end());
      } else if (r.has("rate")) {
        d.process = DemandEntry::Process::Poisson;
        d.rate = r.at("rate").number();
        if (!(d.rate >= 0.) || !std::isfinite(d.rate)) {
          r.at("rate").fail("rate must be finite and >= 0");
        }
        d.start = r.number("start", 0.);
        d.end = r.number("end", std::numeric_limits<double>::infinity());
        if (!(d.end >= d.start)) {
          r.fail("demand window end must be >= start");
        }
      } else {
        r.fail("demand entry needs either 'times' or 'rate'");
      }
      return d;
    }

    BusLine parseBusLine(Reader const& r) {
      BusLine line;
      line.id = BusLineId{r.at("id").id()};
      auto route = r.at("route");
      for (std::size_t i = 0; i < route.size(); ++i) {
        line.route.push_back(EdgeId{route.at(i).id()});
      }
      auto deps = r.at("departures");
      for (std::size_t i = 0; i < deps.size(); ++i) {
        line.departures.push_back(deps.at(i).number());
      }
      std::sort(line.departures.begin(), line.departures.end());
      if (r.has("stops")) {
        auto stops = r.at("stops");
        for (std::size_t i = 0; i < stops.size(); ++i) {
          auto s = stops.at(i);
          line.stops.push_back({StopId{s.at("stop").id()}, s.at("scheduled").number()});
        }
      }
      line.dwell = r.number("dwell", 60.);
      if (!(line.dwell >= 0.)) {
        r.at("dwell").fail("dwell must be >= 0");
      }
      return line;
    }

    double routePosition(NetworkModel const& net, BusLine const& line, BusStop const& stop) {
      double pos = 0.;
      for (auto e : line.route) {
        if (e == stop.edge) {
          return pos + stop.offset;
        }
        pos += net.edge(e).length;
      }
      return -1.;
    }

    void validateBusLine(Scenario const& sc, BusLine const& line, std::string const& source) {
      auto const& net = *sc.network;
      auto const name = "bus line " + std::to_string(line.id.value);
      if (line.route.empty()) {
        validationError(source, name + ": empty route");
      }
      try {
        net.bus_route_lane_path(line.route);
      } catch (ScenarioError const& e) {
        validationError(source, name + ": " + e.what());
      }
      for (std::size_t k = 1; k < line.route.size(); ++k) {
        if (!net.connects(line.route[k - 1], Lane::Right, line.route[k])) {
          validationError(source, name + ": right lane of edge " + std::to_string(line.route[k - 1].value) +
                                      " does not connect to edge " + std::to_string(line.route[k].value));
        }
      }
      if (line.departures.empty()) {
        validationError(source, name + ": no departures");
      }
      double lastPos = -1.;
      double lastSched = -std::numeric_limits<double>::infinity();
      for (auto const& s : line.stops) {
        BusStop const* stop = nullptr;
        try {
          stop = &net.stop(s.stop);
        } catch (std::out_of_range const&) {
          validationError(source, name + ": unknown stop " + std::to_string(s.stop.value));
        }
        auto const pos = routePosition(net, line, *stop);
        if (pos < 0.) {
          validationError(source, name + ": stop " + std::to_string(s.stop.value) + " is not on the route");
        }
        if (pos <= lastPos) {
          validationError(source, name + ": stops must be listed in route order");
        }
        if (!(s.offset > lastSched)) {
          validationError(source, name + ": scheduled arrivals must be strictly increasing");
        }
        lastPos = pos;
        lastSched = s.offset;
      }
    }
  }  // namespace

  bool SignalGate::green(double t) const {
    auto phase = std::fmod(t - green_start, cycle);
    if (phase < 0.) {
      phase += cycle;
    }
    return phase < green_duration;
  }

  BusLine const& Scenario::bus_line(BusLineId id) const {
    for (auto const& line : bus_lines) {
      if (line.id == id) {
        return line;
      }
    }
    throw std::out_of_range{"unknown bus line " + std::to_string(id.value)};
  }

  std::vector<SegmentRef> Scenario::bus_route_lane_path(BusLineId id) const {
    return network->bus_route_lane_path(bus_line(id).route);
  }

  Scenario parse_scenario(std::string_view text, std::string const& source) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (json::parse_error const& e) {
      // Convert the byte offset into a line number.
      auto const upto = std::min<std::size_t>(e.byte, text.size());
      auto const line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
      throw ScenarioError{ScenarioError::Kind::Parse, source + ":" + std::to_string(line) + ": " + e.what()};
    }
    Reader root{doc, "$", source};
    if (!root.is_object()) {
      root.fail("scenario must be a JSON object");
    }

    Scenario sc;
    sc.name = root.has("name") ? root.at("name").string() : source;
    sc.horizon = root.number("horizon", 900.);
    if (!(sc.horizon > 0.)) {
      root.at("horizon").fail("horizon must be > 0");
    }

    std::vector<NodeId> nodes;
    auto nodesR = root.at("nodes");
    for (std::size_t i = 0; i < nodesR.size(); ++i) {
      auto n = nodesR.at(i);
      nodes.push_back(NodeId{n.is_object() ? n.at("id").id() : n.id()});
    }

    std::vector<Edge> edges;
    auto edgesR = root.at("edges");
    for (std::size_t i = 0; i < edgesR.size(); ++i) {
      edges.push_back(parseEdge(edgesR.at(i)));
    }

    std::vector<TurnConnection> connections;
    std::vector<std::pair<EdgeId, EdgeId>> prohibited;
    if (root.has("connections")) {
      auto conns = root.at("connections");
      for (std::size_t i = 0; i < conns.size(); ++i) {
        auto c = conns.at(i);
        EdgeId from{c.at("from").id()};
        EdgeId to{c.at("to").id()};
        auto lanes = c.at("lanes");
        if (lanes.size() == 0) {
          prohibited.emplace_back(from, to);
        }
        for (std::size_t k = 0; k < lanes.size(); ++k) {
          connections.push_back({from, parseLane(lanes.at(k)), to});
        }
      }
    }

    std::vector<BusStop> stops;
    if (root.has("bus_stops")) {
      auto stopsR = root.at("bus_stops");
      for (std::size_t i = 0; i < stopsR.size(); ++i) {
        auto s = stopsR.at(i);
        stops.push_back({StopId{s.at("id").id()}, EdgeId{s.at("edge").id()}, s.at("offset").number(), {}});
      }
    }

    try {
      sc.network = std::make_shared<NetworkModel const>(
          std::move(nodes), std::move(edges), connections, std::move(stops), prohibited, &sc.warnings);
    } catch (ScenarioError const& e) {
      validationError(source, e.what());
    }
    auto const& net = *sc.network;

    if (root.has("bus_lines")) {
      auto lines = root.at("bus_lines");
      std::set<BusLineId> seen;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = parseBusLine(lines.at(i));
        if (!seen.insert(line.id).second) {
          validationError(source, "duplicate bus line " + std::to_string(line.id.value));
        }
        sc.bus_lines.push_back(std::move(line));
      }
      std::sort(sc.bus_lines.begin(), sc.bus_lines.end(), [](auto const& a, auto const& b) { return a.id < b.id; });
      for (auto const& line : sc.bus_lines) {
        validateBusLine(sc, line, source);
      }
    }

    if (root.has("demand")) {
      auto demand = root.at("demand");
      for (std::size_t i = 0; i < demand.size(); ++i) {
        auto entry = parseDemand(demand.at(i), i);
        if (!net.has_node(entry.origin) || !net.has_node(entry.destination)) {
          validationError(source, "demand[" + std::to_string(i) + "] references an unknown node");
        }
        if (entry.origin == entry.destination) {
          validationError(source, "demand[" + std::to_string(i) + "]: origin equals destination");
        }
        if (!initial_route(net, entry.origin, entry.destination, entry.cls, CostView::free_flow(net))) {
          validationError(source, "demand[" + std::to_string(i) + "]: destination " +
                                      std::to_string(entry.destination.value) + " unreachable from origin " +
                                      std::to_string(entry.origin.value));
        }
        sc.demand.entries.push_back(std::move(entry));
      }
    }

    if (root.has("gates")) {
      auto gates = root.at("gates");
      for (std::size_t i = 0; i < gates.size(); ++i) {
        auto g = gates.at(i);
        SignalGate gate{EdgeId{g.at("approach").id()}, g.at("cycle").number(), g.number("green_start", 0.),
                        g.at("green").number()};
        if (!net.has_edge(gate.approach)) {
          g.fail("unknown approach edge");
        }
        if (!(gate.cycle > 0.) || !(gate.green_duration > 0.) || gate.green_duration > gate.cycle) {
          g.fail("gate needs cycle > 0 and 0 < green <= cycle");
        }
        sc.gates.push_back(gate);
      }
    }

    if (root.has("control")) {
      auto control = root.at("control");
      if (!control.is_object()) {
        control.fail("expected an object");
      }
      for (auto const& [key, value] : control.raw().items()) {
        if (!value.is_number()) {
          parseError(source, control.path() + "." + key, "expected a number");
        }
        try {
          sc.control.set(key, value.get<double>());
        } catch (std::invalid_argument const& e) {
          parseError(source, control.path() + "." + key, e.what());
        }
      }
    }
    try {
      sc.control.validate();
    } catch (std::invalid_argument const& e) {
      validationError(source, std::string{"control: "} + e.what());
    }
    return sc;
  }

  Scenario load_scenario(std::filesystem::path const& path) {
    std::ifstream in{path};
    if (!in) {
      throw ScenarioError{ScenarioError::Kind::Parse, path.string() + ": cannot open file"};
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path.string());
  }

}  // namespace dlsim
