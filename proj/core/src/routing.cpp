#include "dlsim/routing.hpp"

#include <algorithm>
#include <queue>

namespace dlsim {

  namespace {
    struct Label {
      double cost;
      std::vector<EdgeId> path;
    };

    // Min-heap on (cost, path) with lexicographic path comparison.
    struct LabelGreater {
      bool operator()(Label const& a, Label const& b) const {
        if (a.cost != b.cost) {
          return a.cost > b.cost;
        }
        return b.path < a.path;
      }
    };
  }  // namespace

  CostView CostView::free_flow(NetworkModel const& net) {
    std::vector<double> costs;
    costs.reserve(net.edges().size());
    for (auto const& e : net.edges()) {
      costs.push_back(2. * e.free_flow_time());
    }
    return CostView{std::move(costs)};
  }

  std::optional<Route> shortest_path(NetworkModel const& net, RouteQuery const& query, CostView const& costs) {
    auto const nEdges = net.edges().size();
    std::vector<bool> blocked(nEdges, false);
    for (auto e : query.forbidden) {
      if (net.has_edge(e)) {
        blocked[net.edge_index(e)] = true;
      }
    }
    auto usable = [&](EdgeId e) {
      return !blocked[net.edge_index(e)] && !net.permitted_lanes(query.cls, e).empty();
    };

    std::vector<bool> settled(nEdges, false);
    std::priority_queue<Label, std::vector<Label>, LabelGreater> open;
    if (query.start_edge) {
      settled[net.edge_index(*query.start_edge)] = true;
      auto const& start = net.edge(*query.start_edge);
      if (start.to == query.destination) {
        return Route{};
      }
      for (auto next : net.out_edges(start.to)) {
        bool const allowed = query.start_lane ? net.connects(start.id, *query.start_lane, next)
                                              : net.turn_allowed(start.id, next, query.cls);
        if (usable(next) && allowed) {
          open.push({costs.cost(net, next), {next}});
        }
      }
    } else {
      if (query.origin == query.destination) {
        return std::nullopt;
      }
      for (auto first : net.out_edges(query.origin)) {
        if (usable(first)) {
          open.push({costs.cost(net, first), {first}});
        }
      }
    }

    while (!open.empty()) {
      auto label = open.top();
      open.pop();
      auto const last = label.path.back();
      auto const idx = net.edge_index(last);
      if (settled[idx]) {
        continue;
      }
      settled[idx] = true;
      auto const& e = net.edge(last);
      if (e.to == query.destination) {
        return std::move(label.path);
      }
      for (auto next : net.out_edges(e.to)) {
        if (settled[net.edge_index(next)] || !usable(next) || !net.turn_allowed(last, next, query.cls)) {
          continue;
        }
        auto path = label.path;
        path.push_back(next);
        open.push({label.cost + costs.cost(net, next), std::move(path)});
      }
    }
    return std::nullopt;
  }

  double route_cost(NetworkModel const& net, std::span<EdgeId const> route, CostView const& costs) {
    double total = 0.;
    for (auto e : route) {
      total += costs.cost(net, e);
    }
    return total;
  }

  std::optional<Route> initial_route(NetworkModel const& net,
                                     NodeId origin,
                                     NodeId destination,
                                     VehicleClass cls,
                                     CostView const& costs) {
    return shortest_path(net, RouteQuery{origin, destination, cls, {}, std::nullopt, std::nullopt}, costs);
  }

  std::optional<Route> reroute(NetworkModel const& net,
                               std::span<EdgeId const> route,
                               std::size_t currentIndex,
                               VehicleClass cls,
                               std::span<EdgeId const> forbidden,
                               CostView const& costs) {
    if (route.empty() || currentIndex + 1 >= route.size()) {
      return std::nullopt;
    }
    auto const current = route[currentIndex];
    RouteQuery query;
    query.destination = net.edge(route.back()).to;
    query.cls = cls;
    query.start_edge = current;
    for (auto e : forbidden) {
      if (e != current) {
        query.forbidden.push_back(e);
      }
    }
    auto tail = shortest_path(net, query, costs);
    if (!tail) {
      return std::nullopt;
    }
    Route result(route.begin(), route.begin() + static_cast<std::ptrdiff_t>(currentIndex) + 1);
    result.insert(result.end(), tail->begin(), tail->end());
    return result;
  }

}  // namespace dlsim
