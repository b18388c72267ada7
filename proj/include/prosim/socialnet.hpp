#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <deque>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prosim/error.hpp"
#include "prosim/log.hpp"
#include "prosim/random.hpp"

namespace prosim {

using NodeId = std::size_t;

/// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  static Edge make(NodeId a, NodeId b) noexcept { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list; rejects self-loops, duplicates and out-of-range nodes.
  Graph(std::size_t n, std::vector<Edge> edges) : n_(n), adjacency_(n) {
    for (auto& e : edges) {
      e = Edge::make(e.u, e.v);
      require(e.v < n, ErrorKind::InvalidParameters, "edge endpoint out of range");
      require(e.u != e.v, ErrorKind::InvalidParameters, "self-loop " + std::to_string(e.u));
    }
    std::sort(edges.begin(), edges.end());
    require(std::adjacent_find(edges.begin(), edges.end()) == edges.end(),
            ErrorKind::InvalidParameters, "duplicate edge");
    for (const auto& e : edges) {
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
    edges_ = std::move(edges);
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Sorted neighbor ids.
  const std::vector<NodeId>& neighbors(NodeId node) const {
    check_node(node);
    return adjacency_[node];
  }

  std::size_t degree(NodeId node) const { return neighbors(node).size(); }

  bool has_edge(NodeId a, NodeId b) const {
    const auto& list = neighbors(a);
    return std::binary_search(list.begin(), list.end(), b);
  }

  void check_node(NodeId node) const {
    require(node < n_, ErrorKind::InvalidParameters,
            "node " + std::to_string(node) + " out of range for graph of " + std::to_string(n_));
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
};

inline constexpr int kMaxRewireAttempts = 64;

/// Watts-Strogatz small world: ring lattice with k/2 neighbors per side, then
/// each lattice edge (u, u+j) is rewired with probability p to (u, w) for a
/// uniform w. A draw that would make a self-loop or duplicate is redrawn;
/// after kMaxRewireAttempts the original edge is kept.
inline Graph watts_strogatz(std::size_t n, std::size_t k, double p, Seed seed) {
  require(k >= 2 && k % 2 == 0, ErrorKind::InvalidParameters, "k must be even and at least 2");
  require(n > k, ErrorKind::InvalidParameters, "n must exceed k");
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidParameters, "p must lie in [0, 1]");

  std::vector<std::set<NodeId>> adj(n);
  for (std::size_t j = 1; j <= k / 2; ++j) {
    for (NodeId u = 0; u < n; ++u) {
      const NodeId v = (u + j) % n;
      adj[u].insert(v);
      adj[v].insert(u);
    }
  }

  Rng rng(seed);
  for (std::size_t j = 1; j <= k / 2; ++j) {
    for (NodeId u = 0; u < n; ++u) {
      const NodeId v = (u + j) % n;
      if (rng.uniform01() >= p) continue;
      for (int attempt = 0; attempt < kMaxRewireAttempts; ++attempt) {
        const auto w = static_cast<NodeId>(rng.below(n));
        if (w == u || adj[u].contains(w)) continue;
        adj[u].erase(v);
        adj[v].erase(u);
        adj[u].insert(w);
        adj[w].insert(u);
        break;
      }
    }
  }

  std::vector<Edge> edges;
  edges.reserve(n * k / 2);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId w : adj[u]) {
      if (u < w) edges.push_back({u, w});
    }
  }
  return Graph(n, std::move(edges));
}

struct EdgeSubset {
  int round = 1;
  std::vector<Edge> active;  // sorted

  bool operator==(const EdgeSubset&) const = default;
};

inline std::size_t activation_size(double fraction, std::size_t edge_count) noexcept {
  if (edge_count == 0) return 0;
  return std::max<std::size_t>(1, floor_fraction(fraction, edge_count));
}

/// Uniform sample without replacement of floor(fraction * |E|) edges (at
/// least one). The stream is keyed by (seed, round), so rounds are
/// independent and any round can be replayed alone.
inline EdgeSubset activate_edges(const Graph& graph, double fraction, int round, Seed seed) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::InvalidParameters,
          "activation fraction must lie in (0, 1]");
  require(round >= 1, ErrorKind::InvalidParameters, "round must be at least 1");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
  const auto& all = graph.edges();
  EdgeSubset out;
  out.round = round;
  for (std::size_t idx : rng.sample_indices(all.size(), activation_size(fraction, all.size()))) {
    out.active.push_back(all[idx]);
  }
  return out;
}

/// Nodes sharing an active edge with `node`, sorted by id.
inline std::vector<NodeId> active_neighbors(const Graph& graph, const EdgeSubset& subset,
                                            NodeId node) {
  graph.check_node(node);
  std::vector<NodeId> out;
  for (const auto& e : subset.active) {
    if (e.u == node) out.push_back(e.v);
    if (e.v == node) out.push_back(e.u);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// active_neighbors for every node in one pass over the subset.
inline std::vector<std::vector<NodeId>> active_adjacency(const Graph& graph,
                                                         const EdgeSubset& subset) {
  std::vector<std::vector<NodeId>> out(graph.node_count());
  for (const auto& e : subset.active) {
    out[e.u].push_back(e.v);
    out[e.v].push_back(e.u);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

/// Mean local clustering; nodes of degree < 2 contribute zero.
inline double average_clustering(const Graph& graph) {
  const std::size_t n = graph.node_count();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    const auto& nb = graph.neighbors(i);
    const std::size_t d = nb.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const auto& na = graph.neighbors(nb[a]);
      for (std::size_t b = a + 1; b < d; ++b) {
        if (std::binary_search(na.begin(), na.end(), nb[b])) ++links;
      }
    }
    total += 2.0 * static_cast<double>(links) / static_cast<double>(d * (d - 1));
  }
  return total / static_cast<double>(n);
}

/// Hop distances from `source`; unreachable nodes hold SIZE_MAX.
inline std::vector<std::size_t> bfs_distances(const Graph& graph, NodeId source) {
  constexpr auto unreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(graph.node_count(), unreached);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId cur = queue.front();
    queue.pop_front();
    for (NodeId nb : graph.neighbors(cur)) {
      if (dist[nb] == unreached) {
        dist[nb] = dist[cur] + 1;
        queue.push_back(nb);
      }
    }
  }
  return dist;
}

/// Mean shortest-path length over connected ordered pairs.
inline double characteristic_path_length(const Graph& graph) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (NodeId s = 0; s < graph.node_count(); ++s) {
    const auto dist = bfs_distances(graph, s);
    for (NodeId t = 0; t < graph.node_count(); ++t) {
      if (t == s || dist[t] == std::numeric_limits<std::size_t>::max()) continue;
      total += static_cast<double>(dist[t]);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

inline bool is_connected(const Graph& graph) {
  if (graph.node_count() == 0) return true;
  const auto dist = bfs_distances(graph, 0);
  return std::none_of(dist.begin(), dist.end(), [](std::size_t d) {
    return d == std::numeric_limits<std::size_t>::max();
  });
}

/// Builds the graph and logs a warning when rewiring disconnected it.
inline Graph build_small_world(std::size_t n, std::size_t k, double p, Seed seed) {
  Graph g = watts_strogatz(n, k, p, seed);
  if (!is_connected(g)) log_warning("small-world graph is disconnected (seed " +
                                    std::to_string(seed) + ")");
  return g;
}

/// One "u v" pair per line.
inline std::string to_edge_list(const Graph& graph) {
  std::ostringstream os;
  for (const auto& e : graph.edges()) os << e.u << ' ' << e.v << '\n';
  return os.str();
}

inline Graph parse_edge_list(std::size_t n, const std::string& text) {
  std::istringstream is(text);
  std::vector<Edge> edges;
  NodeId u = 0, v = 0;
  while (is >> u >> v) edges.push_back(Edge::make(u, v));
  require(is.eof(), ErrorKind::DataError, "malformed edge list");
  return Graph(n, std::move(edges));
}

}  // namespace prosim
