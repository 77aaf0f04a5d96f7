#pragma once

#include "dlsim/ids.hpp"
#include "dlsim/network.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dlsim {

  using Route = std::vector<EdgeId>;

  /// Per-edge traversal cost in seconds, indexed like NetworkModel::edges().
  class CostView {
  public:
    CostView() = default;
    explicit CostView(std::vector<double> costs) : m_costs{std::move(costs)} {}

    /// Free-flow cost: both segments at free-flow time.
    static CostView free_flow(NetworkModel const& net);

    double operator[](std::size_t edgeIndex) const { return m_costs[edgeIndex]; }
    double cost(NetworkModel const& net, EdgeId e) const { return m_costs[net.edge_index(e)]; }
    std::size_t size() const { return m_costs.size(); }
    std::span<double const> values() const { return m_costs; }

  private:
    std::vector<double> m_costs;
  };

  struct RouteQuery {
    NodeId origin;
    NodeId destination;
    VehicleClass cls{VehicleClass::CAV};
    std::vector<EdgeId> forbidden;
    /// When set, the search continues from the end of this edge (mid-trip reroute) and
    /// `origin` is ignored. The returned path excludes the start edge.
    std::optional<EdgeId> start_edge;
    /// With `start_edge`: restricts the first turn to connections from this lane.
    std::optional<Lane> start_lane;
  };

  /// Minimum-cost edge path honoring turn connectivity for the class. Among equal-cost paths the
  /// lexicographically smallest edge-id sequence wins. `nullopt` when unreachable.
  std::optional<Route> shortest_path(NetworkModel const& net, RouteQuery const& query, CostView const& costs);

  double route_cost(NetworkModel const& net, std::span<EdgeId const> route, CostView const& costs);

  std::optional<Route> initial_route(NetworkModel const& net,
                                     NodeId origin,
                                     NodeId destination,
                                     VehicleClass cls,
                                     CostView const& costs);

  /// Keeps route[0..currentIndex] and replaces the remainder with a shortest path to the original
  /// destination that avoids `forbidden`. `nullopt` when the vehicle is on its final edge or no
  /// alternative exists.
  std::optional<Route> reroute(NetworkModel const& net,
                               std::span<EdgeId const> route,
                               std::size_t currentIndex,
                               VehicleClass cls,
                               std::span<EdgeId const> forbidden,
                               CostView const& costs);

}  // namespace dlsim
