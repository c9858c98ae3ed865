// Independent reference implementations used as test oracles. These stay
// deliberately naive (dense loops, exhaustive enumeration) and must not call
// the code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fn/graph.hpp"
#include "fn/matrix.hpp"

namespace oracle {

// All-pairs shortest paths, O(n^3).
inline std::vector<std::vector<double>> floyd_warshall(const fn::Graph& g) {
  const int n = g.num_nodes;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n), inf));
  for (int v = 0; v < n; ++v) {
    d[v][v] = 0.0;
    for (int u : g.neighbors_of(v)) d[v][u] = 1.0;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Minimum edge cut over every balanced assignment of n nodes into C blocks
// (max block size <= cap, no empty blocks). Exponential; keep n tiny.
inline std::int64_t min_balanced_cut(const fn::Graph& g, int C, int cap) {
  const int n = g.num_nodes;
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::function<void(int)> rec = [&](int v) {
    if (v == n) {
      std::vector<int> count(static_cast<std::size_t>(C), 0);
      for (int a : assign) count[static_cast<std::size_t>(a)]++;
      for (int c = 0; c < C; ++c)
        if (count[static_cast<std::size_t>(c)] == 0 || count[static_cast<std::size_t>(c)] > cap) return;
      std::int64_t cut = 0;
      for (int i = 0; i < n; ++i)
        for (int u : g.neighbors_of(i))
          if (i < u && assign[static_cast<std::size_t>(i)] != assign[static_cast<std::size_t>(u)]) cut++;
      best = std::min(best, cut);
      return;
    }
    for (int c = 0; c < C; ++c) {
      assign[static_cast<std::size_t>(v)] = c;
      rec(v + 1);
    }
  };
  rec(0);
  return best;
}

// Best modularity over all 2-way splits (exponential).
inline double best_two_way_modularity(const fn::Graph& g,
                                      const std::function<double(const std::vector<int>&)>& mod) {
  const int n = g.num_nodes;
  double best = -1e300;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) assign[static_cast<std::size_t>(v)] = (mask >> v) & 1u;
    best = std::max(best, mod(assign));
  }
  return best;
}

// Dense adjacency multiply: (A H)[v] = sum over neighbors.
inline fn::Matrix dense_adjacency_multiply(const fn::Graph& g, const fn::Matrix& h) {
  fn::Matrix out(g.num_nodes, h.cols);
  for (int v = 0; v < g.num_nodes; ++v)
    for (int u : g.neighbors_of(v))
      for (int j = 0; j < h.cols; ++j) out(v, j) += h(u, j);
  return out;
}

// Brandes oracle replacement: exhaustive all-shortest-paths dependency count
// via path enumeration over BFS DAGs. O(n * paths); n <= 12.
inline std::vector<double> betweenness_exhaustive(const fn::Graph& g) {
  const int n = g.num_nodes;
  const auto dist = floyd_warshall(g);
  std::vector<double> cb(static_cast<std::size_t>(n), 0.0);
  // Count shortest paths s->t and how many pass through w.
  std::vector<std::vector<double>> sigma(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int s = 0; s < n; ++s) {
    sigma[s][s] = 1.0;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return dist[s][a] < dist[s][b]; });
    for (int t : order) {
      if (t == s || std::isinf(dist[s][t])) continue;
      for (int u : g.neighbors_of(t))
        if (dist[s][u] + 1.0 == dist[s][t]) sigma[s][t] += sigma[s][u];
    }
  }
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      if (std::isinf(dist[s][t]) || sigma[s][t] == 0.0) continue;
      for (int w = 0; w < n; ++w) {
        if (w == s || w == t) continue;
        if (dist[s][w] + dist[w][t] == dist[s][t]) cb[static_cast<std::size_t>(w)] += sigma[s][w] * sigma[w][t] / sigma[s][t];
      }
    }
  return cb;
}

// Chi-square upper critical value checks for uniform label distributions.
inline double chi_square_statistic(const std::vector<std::int64_t>& counts, double expected) {
  double stat = 0.0;
  for (std::int64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace oracle
