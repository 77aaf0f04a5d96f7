#pragma once

#include "dlsim/ids.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dlsim {

  /// Raised for scenario files that fail to parse or violate a network invariant.
  class ScenarioError : public std::runtime_error {
  public:
    enum class Kind { Parse, Validation };

    ScenarioError(Kind kind, std::string const& what) : std::runtime_error{what}, m_kind{kind} {}

    Kind kind() const { return m_kind; }

  private:
    Kind m_kind;
  };

  /// One of the four lane segments of an edge: lane x {upstream m=1, downstream m=2}.
  struct SegmentRef {
    EdgeId edge;
    Lane lane{Lane::Left};
    std::uint8_t m{1};

    auto operator<=>(SegmentRef const&) const = default;
  };

  /// Adjacent segment on the same edge, same m, other lane.
  constexpr SegmentRef adjacent(SegmentRef s) { return {s.edge, other(s.lane), s.m}; }

  struct Edge {
    EdgeId id;
    NodeId from;
    NodeId to;
    double length{0.};
    double free_flow_speed{0.};
    bool right_lane_is_dl{false};
    // Per lane (index by Lane), per segment. Vehicles/second.
    std::array<double, 2> capacity{0., 0.};
    // Per lane, per segment storage limit.
    std::array<int, 2> jam_count{1, 1};

    double segment_length() const { return length / 2.; }
    /// Free-flow traversal time of one segment.
    double free_flow_time() const { return segment_length() / free_flow_speed; }
  };

  struct TurnConnection {
    EdgeId from_edge;
    Lane from_lane{Lane::Left};
    EdgeId to_edge;
  };

  struct BusStop {
    StopId id;
    EdgeId edge;
    double offset{0.};
    SegmentRef segment;
  };

  /// Two-bit set of lanes.
  class LaneSet {
  public:
    constexpr LaneSet() = default;
    constexpr LaneSet(std::initializer_list<Lane> lanes) {
      for (auto l : lanes) {
        insert(l);
      }
    }

    constexpr void insert(Lane l) { m_bits |= bit(l); }
    constexpr bool contains(Lane l) const { return (m_bits & bit(l)) != 0; }
    constexpr bool empty() const { return m_bits == 0; }
    constexpr std::size_t size() const { return (m_bits & 1u) + ((m_bits >> 1) & 1u); }
    constexpr std::uint8_t bits() const { return m_bits; }
    constexpr bool operator==(LaneSet const&) const = default;

  private:
    static constexpr std::uint8_t bit(Lane l) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(l)); }
    std::uint8_t m_bits{0};
  };

  /// Lanes a vehicle class may occupy on an edge.
  LaneSet permitted_lanes(VehicleClass cls, Edge const& edge);

  /// Directed two-lane road graph with segment resolution. Immutable once built.
  class NetworkModel {
  public:
    /// Builds and validates. Connections missing for an adjacent edge pair are synthesized
    /// (all lanes) and a warning is appended to `warnings`, unless the pair is listed in
    /// `prohibited_turns`.
    NetworkModel(std::vector<NodeId> nodes,
                 std::vector<Edge> edges,
                 std::vector<TurnConnection> const& connections,
                 std::vector<BusStop> stops,
                 std::vector<std::pair<EdgeId, EdgeId>> const& prohibited_turns = {},
                 std::vector<std::string>* warnings = nullptr);

    std::span<NodeId const> nodes() const { return m_nodes; }
    std::span<Edge const> edges() const { return m_edges; }
    std::span<BusStop const> stops() const { return m_stops; }

    bool has_node(NodeId id) const;
    bool has_edge(EdgeId id) const { return m_edgeIndex.contains(id); }
    Edge const& edge(EdgeId id) const { return m_edges[edge_index(id)]; }
    std::size_t edge_index(EdgeId id) const;
    BusStop const& stop(StopId id) const;

    /// Outgoing edges of a node, ordered by id.
    std::span<EdgeId const> out_edges(NodeId node) const;

    /// Lanes of `from` that connect to `to`; empty when the turn is prohibited or the edges are not adjacent.
    LaneSet connecting_lanes(EdgeId from, EdgeId to) const;
    bool connects(EdgeId from, Lane lane, EdgeId to) const { return connecting_lanes(from, to).contains(lane); }
    /// A class may turn from `from` into `to` if some permitted lane of `from` connects and `to` admits the class.
    bool turn_allowed(EdgeId from, EdgeId to, VehicleClass cls) const;

    SegmentRef segment_of(EdgeId edge, Lane lane, double offset) const;

    std::size_t segment_count() const { return m_edges.size() * 4; }
    std::size_t segment_index(SegmentRef s) const {
      return edge_index(s.edge) * 4 + static_cast<std::size_t>(s.lane) * 2 + (s.m - 1u);
    }
    SegmentRef segment_at(std::size_t index) const;

    double free_flow_time(SegmentRef s) const { return edge(s.edge).free_flow_time(); }
    double capacity(SegmentRef s) const { return edge(s.edge).capacity[static_cast<std::size_t>(s.lane)]; }
    int jam_count(SegmentRef s) const { return edge(s.edge).jam_count[static_cast<std::size_t>(s.lane)]; }
    bool is_dl(SegmentRef s) const { return s.lane == Lane::Right && edge(s.edge).right_lane_is_dl; }
    /// Edge-relative position of a segment's entrance.
    double segment_start(SegmentRef s) const { return s.m == 1 ? 0. : edge(s.edge).segment_length(); }
    double segment_end(SegmentRef s) const {
      auto const& e = edge(s.edge);
      return s.m == 1 ? e.segment_length() : e.length;
    }

    LaneSet permitted_lanes(VehicleClass cls, EdgeId edge) const { return dlsim::permitted_lanes(cls, this->edge(edge)); }

    /// (e^R, 1), (e^R, 2) per edge in route order. Throws ScenarioError when an edge is not a DL.
    std::vector<SegmentRef> bus_route_lane_path(std::span<EdgeId const> route) const;

  private:
    std::vector<NodeId> m_nodes;
    std::vector<Edge> m_edges;
    std::vector<BusStop> m_stops;
    std::unordered_map<EdgeId, std::size_t> m_edgeIndex;
    std::unordered_map<NodeId, std::vector<EdgeId>> m_outEdges;
    // Keyed by (from index, to index).
    std::unordered_map<std::uint64_t, LaneSet> m_connections;
  };

}  // namespace dlsim
