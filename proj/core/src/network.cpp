#include "dlsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace dlsim {

  namespace {
    std::string edgeName(EdgeId id) { return "edge " + std::to_string(id.value); }

    [[noreturn]] void invalid(std::string const& what) {
      throw ScenarioError{ScenarioError::Kind::Validation, what};
    }

    std::uint64_t pairKey(std::size_t from, std::size_t to) {
      return (static_cast<std::uint64_t>(from) << 32) | static_cast<std::uint64_t>(to);
    }
  }  // namespace

  LaneSet permitted_lanes(VehicleClass cls, Edge const& edge) {
    switch (cls) {
      case VehicleClass::Bus:
        return edge.right_lane_is_dl ? LaneSet{Lane::Right} : LaneSet{};
      case VehicleClass::CAV:
        return LaneSet{Lane::Left, Lane::Right};
      case VehicleClass::HDV:
        return edge.right_lane_is_dl ? LaneSet{Lane::Left} : LaneSet{Lane::Left, Lane::Right};
    }
    return {};
  }

  NetworkModel::NetworkModel(std::vector<NodeId> nodes,
                             std::vector<Edge> edges,
                             std::vector<TurnConnection> const& connections,
                             std::vector<BusStop> stops,
                             std::vector<std::pair<EdgeId, EdgeId>> const& prohibited_turns,
                             std::vector<std::string>* warnings)
      : m_nodes{std::move(nodes)}, m_edges{std::move(edges)}, m_stops{std::move(stops)} {
    std::sort(m_nodes.begin(), m_nodes.end());
    if (std::adjacent_find(m_nodes.begin(), m_nodes.end()) != m_nodes.end()) {
      invalid("duplicate node id");
    }
    std::sort(m_edges.begin(), m_edges.end(), [](Edge const& a, Edge const& b) { return a.id < b.id; });
    std::sort(m_stops.begin(), m_stops.end(), [](BusStop const& a, BusStop const& b) { return a.id < b.id; });

    for (std::size_t i = 0; i < m_edges.size(); ++i) {
      auto const& e = m_edges[i];
      if (!e.id.valid()) {
        invalid("edge without id");
      }
      if (!m_edgeIndex.emplace(e.id, i).second) {
        invalid("duplicate " + edgeName(e.id));
      }
      if (!has_node(e.from) || !has_node(e.to)) {
        invalid(edgeName(e.id) + " references an unknown node");
      }
      if (e.from == e.to) {
        invalid(edgeName(e.id) + " is a self-loop");
      }
      if (!(e.length > 0.) || !std::isfinite(e.length)) {
        invalid(edgeName(e.id) + ": length must be > 0");
      }
      if (!(e.free_flow_speed > 0.) || !std::isfinite(e.free_flow_speed)) {
        invalid(edgeName(e.id) + ": free_flow_speed must be > 0");
      }
      for (auto c : e.capacity) {
        if (!(c > 0.) || !std::isfinite(c)) {
          invalid(edgeName(e.id) + ": capacity must be > 0");
        }
      }
      for (auto j : e.jam_count) {
        if (j < 1) {
          invalid(edgeName(e.id) + ": jam_count must be >= 1");
        }
      }
      m_outEdges[e.from].push_back(e.id);
    }

    for (auto const& c : connections) {
      if (!has_edge(c.from_edge) || !has_edge(c.to_edge)) {
        invalid("connection references an unknown edge");
      }
      if (edge(c.from_edge).to != edge(c.to_edge).from) {
        invalid("connection " + edgeName(c.from_edge) + " -> " + edgeName(c.to_edge) +
                ": edges are not adjacent");
      }
      m_connections[pairKey(edge_index(c.from_edge), edge_index(c.to_edge))].insert(c.from_lane);
    }
    std::set<std::uint64_t> prohibited;
    for (auto const& [from, to] : prohibited_turns) {
      if (!has_edge(from) || !has_edge(to)) {
        invalid("prohibited turn references an unknown edge");
      }
      auto const key = pairKey(edge_index(from), edge_index(to));
      if (m_connections.contains(key)) {
        invalid("turn " + edgeName(from) + " -> " + edgeName(to) + " is both connected and prohibited");
      }
      prohibited.insert(key);
    }

    // Synthesize all-lane connections for adjacent pairs the file does not mention.
    for (std::size_t i = 0; i < m_edges.size(); ++i) {
      auto it = m_outEdges.find(m_edges[i].to);
      if (it == m_outEdges.end()) {
        continue;
      }
      for (auto next : it->second) {
        auto const key = pairKey(i, edge_index(next));
        if (m_connections.contains(key) || prohibited.contains(key)) {
          continue;
        }
        m_connections.emplace(key, LaneSet{Lane::Left, Lane::Right});
        if (warnings != nullptr) {
          warnings->push_back("synthesized all-lane connection " + edgeName(m_edges[i].id) + " -> " +
                              edgeName(next));
        }
      }
    }

    std::set<StopId> seenStops;
    for (auto& stop : m_stops) {
      if (!seenStops.insert(stop.id).second) {
        invalid("duplicate bus stop " + std::to_string(stop.id.value));
      }
      if (!has_edge(stop.edge)) {
        invalid("bus stop " + std::to_string(stop.id.value) + " references an unknown edge");
      }
      auto const& e = edge(stop.edge);
      if (!e.right_lane_is_dl) {
        invalid("bus stop " + std::to_string(stop.id.value) + " is hosted on " + edgeName(e.id) +
                " whose right lane is not a dedicated lane");
      }
      if (!(stop.offset > 0.) || stop.offset > e.length) {
        invalid("bus stop " + std::to_string(stop.id.value) + ": offset must lie in (0, length]");
      }
      stop.segment = segment_of(stop.edge, Lane::Right, stop.offset);
    }
  }

  bool NetworkModel::has_node(NodeId id) const {
    return std::binary_search(m_nodes.begin(), m_nodes.end(), id);
  }

  std::size_t NetworkModel::edge_index(EdgeId id) const {
    auto it = m_edgeIndex.find(id);
    if (it == m_edgeIndex.end()) {
      throw std::out_of_range{"unknown " + edgeName(id)};
    }
    return it->second;
  }

  BusStop const& NetworkModel::stop(StopId id) const {
    auto it = std::lower_bound(
        m_stops.begin(), m_stops.end(), id, [](BusStop const& s, StopId v) { return s.id < v; });
    if (it == m_stops.end() || it->id != id) {
      throw std::out_of_range{"unknown bus stop " + std::to_string(id.value)};
    }
    return *it;
  }

  std::span<EdgeId const> NetworkModel::out_edges(NodeId node) const {
    auto it = m_outEdges.find(node);
    if (it == m_outEdges.end()) {
      return {};
    }
    return it->second;
  }

  LaneSet NetworkModel::connecting_lanes(EdgeId from, EdgeId to) const {
    auto it = m_connections.find(pairKey(edge_index(from), edge_index(to)));
    return it == m_connections.end() ? LaneSet{} : it->second;
  }

  bool NetworkModel::turn_allowed(EdgeId from, EdgeId to, VehicleClass cls) const {
    auto const lanes = connecting_lanes(from, to);
    auto const fromLanes = permitted_lanes(cls, from);
    bool anyLane = (lanes.bits() & fromLanes.bits()) != 0;
    return anyLane && !permitted_lanes(cls, to).empty();
  }

  SegmentRef NetworkModel::segment_of(EdgeId id, Lane lane, double offset) const {
    auto const& e = edge(id);
    if (!(offset >= 0.) || offset > e.length) {
      throw std::out_of_range{"offset " + std::to_string(offset) + " outside " + edgeName(id)};
    }
    return {id, lane, static_cast<std::uint8_t>(offset < e.segment_length() ? 1 : 2)};
  }

  SegmentRef NetworkModel::segment_at(std::size_t index) const {
    auto const& e = m_edges.at(index / 4);
    auto const rem = index % 4;
    return {e.id, rem >= 2 ? Lane::Right : Lane::Left, static_cast<std::uint8_t>(rem % 2 + 1)};
  }

  std::vector<SegmentRef> NetworkModel::bus_route_lane_path(std::span<EdgeId const> route) const {
    std::vector<SegmentRef> path;
    path.reserve(route.size() * 2);
    for (std::size_t k = 0; k < route.size(); ++k) {
      if (!has_edge(route[k])) {
        invalid("bus route references unknown " + edgeName(route[k]));
      }
      if (!edge(route[k]).right_lane_is_dl) {
        invalid("bus route infeasible: " + edgeName(route[k]) +
                " has no dedicated right lane (every bus route edge must be a DL)");
      }
      if (k > 0 && edge(route[k - 1]).to != edge(route[k]).from) {
        invalid("bus route is not contiguous at " + edgeName(route[k]));
      }
      path.push_back({route[k], Lane::Right, 1});
      path.push_back({route[k], Lane::Right, 2});
    }
    return path;
  }

}  // namespace dlsim
