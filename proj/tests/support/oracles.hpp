#pragma once

#include "dlsim/controller.hpp"
#include "dlsim/network.hpp"
#include "dlsim/params.hpp"
#include "dlsim/routing.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace dlsim::testing {

  inline double bpr_reference(double t0, double flow, double capacity, BprParams const& p) {
    using Big = boost::multiprecision::cpp_dec_float_50;
    Big const ratio = Big{flow} / Big{capacity};
    Big const result = Big{t0} * (Big{1} + Big{p.alpha} * boost::multiprecision::pow(ratio, Big{p.beta}));
    return result.convert_to<double>();
  }

  /// Exhaustive argmax: the candidate that beats every other one pairwise (higher utility, or equal
  /// utility and lower id). Fires on a strictly positive score.
  inline Selection select_reference(std::span<ScoredCandidate const> scored) {
    Selection out;
    for (auto const& c : scored) {
      bool const dominates = std::ranges::all_of(scored, [&](ScoredCandidate const& d) {
        return d.vehicle == c.vehicle || c.utility > d.utility || (c.utility == d.utility && c.vehicle < d.vehicle);
      });
      if (dominates) {
        out.winner = c.vehicle;
        out.utility = c.utility;
        out.fired = c.utility > 0.;
      }
    }
    return out;
  }

  /// Candidate set of the given size with distinct ids and utilities drawn from a small grid so
  /// that ties are frequent.
  inline std::vector<ScoredCandidate> random_candidates(std::mt19937_64& rng, std::size_t size) {
    std::vector<std::uint32_t> ids(40);
    std::iota(ids.begin(), ids.end(), 0u);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::uniform_int_distribution<int> grid{-8, 8};
    std::vector<ScoredCandidate> out;
    for (std::size_t i = 0; i < size; ++i) {
      out.push_back({VehicleId{ids[i]}, 0.125 * grid(rng)});
    }
    return out;
  }

  struct RandomGraph {
    NetworkModel net;
    CostView costs;
    NodeId origin;
    NodeId destination;
  };

  /// Random directed graph (all turns allowed, no dedicated lanes) with per-edge costs in [1, 100].
  inline RandomGraph random_graph(std::mt19937_64& rng, int maxNodes = 8, int maxEdges = 14) {
    std::uniform_int_distribution<int> nodeCount{2, maxNodes};
    int const n = nodeCount(rng);
    std::vector<std::pair<int, int>> pairs;
    for (int a = 1; a <= n; ++a) {
      for (int b = 1; b <= n; ++b) {
        if (a != b) {
          pairs.emplace_back(a, b);
        }
      }
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::uniform_int_distribution<int> edgeCount{1, std::min<int>(maxEdges, static_cast<int>(pairs.size()))};
    pairs.resize(static_cast<std::size_t>(edgeCount(rng)));

    std::vector<NodeId> nodes;
    for (int a = 1; a <= n; ++a) {
      nodes.emplace_back(static_cast<std::uint32_t>(a));
    }
    std::vector<Edge> edges;
    std::uniform_real_distribution<double> cost{1., 100.};
    std::vector<double> costs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      Edge e;
      e.id = EdgeId{static_cast<std::uint32_t>(i + 1)};
      e.from = NodeId{static_cast<std::uint32_t>(pairs[i].first)};
      e.to = NodeId{static_cast<std::uint32_t>(pairs[i].second)};
      e.length = 100.;
      e.free_flow_speed = 10.;
      e.capacity = {0.5, 0.5};
      e.jam_count = {7, 7};
      edges.push_back(e);
      costs.push_back(cost(rng));
    }
    std::uniform_int_distribution<int> pick{1, n};
    NodeId origin{static_cast<std::uint32_t>(pick(rng))};
    NodeId destination = origin;
    while (destination == origin) {
      destination = NodeId{static_cast<std::uint32_t>(pick(rng))};
    }
    NetworkModel net{std::move(nodes), std::move(edges), {}, {}};
    return {std::move(net), CostView{std::move(costs)}, origin, destination};
  }

  /// Cheapest simple path by exhaustive enumeration; nullopt when unreachable.
  inline std::optional<double> brute_force_cost(NetworkModel const& net,
                                                NodeId origin,
                                                NodeId destination,
                                                VehicleClass cls,
                                                CostView const& costs) {
    std::optional<double> best;
    std::vector<NodeId> visited{origin};
    std::vector<EdgeId> path;
    auto dfs = [&](auto&& self, NodeId at, double cost) -> void {
      if (at == destination) {
        if (!best || cost < *best) {
          best = cost;
        }
        return;
      }
      for (auto e : net.out_edges(at)) {
        auto const& edge = net.edge(e);
        if (net.permitted_lanes(cls, e).empty() || std::ranges::find(visited, edge.to) != visited.end()) {
          continue;
        }
        if (!path.empty() && !net.turn_allowed(path.back(), e, cls)) {
          continue;
        }
        visited.push_back(edge.to);
        path.push_back(e);
        self(self, edge.to, cost + costs.cost(net, e));
        path.pop_back();
        visited.pop_back();
      }
    };
    dfs(dfs, origin, 0.);
    return best;
  }

}  // namespace dlsim::testing
