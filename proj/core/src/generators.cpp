#include "fn/generators.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "fn/rng.hpp"

namespace fn {

Graph erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("erdos_renyi: negative n");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("erdos_renyi: p outside [0,1]");
  Rng rng = Rng(seed).stream("erdos_renyi");
  std::vector<std::pair<int, int>> edges;
  if (p >= 1.0) {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  } else if (p > 0.0) {
    // Batagelj-Brandes skipping over the lexicographic pair sequence.
    const double logq = std::log(1.0 - p);
    std::int64_t v = 1, w = -1;
    while (v < n) {
      const double r = rng.uniform();
      w += 1 + static_cast<std::int64_t>(std::floor(std::log(1.0 - r) / logq));
      while (w >= v && v < n) {
        w -= v;
        v += 1;
      }
      if (v < n) edges.emplace_back(static_cast<int>(w), static_cast<int>(v));
    }
  }
  return from_edge_list(n, edges);
}

Dataset tree_neighbours_match(int depth, int samples, std::uint64_t seed) {
  if (depth < 1) throw std::invalid_argument("tree_neighbours_match: depth must be >= 1");
  if (samples < 1) throw std::invalid_argument("tree_neighbours_match: samples must be >= 1");
  const std::int64_t leaves = std::int64_t{1} << depth;
  const std::int64_t nodes = (std::int64_t{1} << (depth + 1)) - 1;
  const std::int64_t feat_cols = 2 * (leaves + 1);
  const std::int64_t feature_doubles = static_cast<std::int64_t>(samples) * nodes * feat_cols;
  if (feature_doubles > (std::int64_t{1} << 30))
    throw std::invalid_argument("tree_neighbours_match: depth " + std::to_string(depth) +
                                " with " + std::to_string(samples) +
                                " samples exceeds the feature memory cap");

  const int n = static_cast<int>(nodes);
  const int L = static_cast<int>(leaves);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  for (int v = 1; v < n; ++v) edges.emplace_back((v - 1) / 2, v);
  const Graph skeleton = from_edge_list(n, edges);
  const int first_leaf = L - 1;  // heap layout: leaves occupy [2^r - 1, 2^(r+1) - 2]

  Rng rng = Rng(seed).stream("tree_neighbours_match");
  Dataset ds;
  ds.task = Task::NodeClassification;
  ds.num_classes = L;
  ds.graphs.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    Graph g = skeleton;
    g.node_features = Matrix(n, static_cast<int>(feat_cols));
    const std::vector<int> attr = rng.permutation(L);
    const int target = static_cast<int>(rng.uniform_int(L));
    for (int j = 0; j < L; ++j) {
      const int v = first_leaf + j;
      g.node_features(v, 1 + j) = 1.0;                          // class slot
      g.node_features(v, static_cast<int>(leaves + 1) + 1 + attr[static_cast<std::size_t>(j)]) = 1.0;  // attribute slot
    }
    g.node_features(0, 0) = 1.0;  // "no class" marker on the root
    g.node_features(0, static_cast<int>(leaves + 1) + 1 + attr[static_cast<std::size_t>(target)]) = 1.0;
    for (int v = 1; v < first_leaf; ++v) {
      g.node_features(v, 0) = 1.0;
      g.node_features(v, static_cast<int>(leaves + 1)) = 1.0;
    }
    g.node_labels.assign(static_cast<std::size_t>(n), -1);
    g.node_labels[0] = target;
    ds.graphs.push_back(std::move(g));
  }
  ds.train_idx.resize(static_cast<std::size_t>(samples));
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), 0);
  return ds;
}

std::vector<int> csl_default_skips() { return {2, 3, 4, 5, 6, 9, 11, 12, 13, 16}; }

Dataset csl_graphs(int n, const std::vector<int>& skip_lengths, int copies_per_class,
                   std::uint64_t seed, int random_feature_dim) {
  if (n < 5) throw std::invalid_argument("csl_graphs: n too small");
  for (int s : skip_lengths) {
    // Valid skips exclude 1 (duplicate cycle edges) and n/2 (antipodal pairs
    // would be stored twice). Any 1 < s < n/2 keeps the graph 4-regular and
    // connected through the base cycle; the skip edges alone split into
    // gcd(n, s) cycles, which is irrelevant for connectivity here.
    if (s <= 1 || 2 * s >= n)
      throw std::invalid_argument("csl_graphs: invalid skip length " + std::to_string(s) +
                                  " for n=" + std::to_string(n));
  }
  if (copies_per_class < 1) throw std::invalid_argument("csl_graphs: copies_per_class must be >= 1");

  Rng rng = Rng(seed).stream("csl_graphs");
  Dataset ds;
  ds.task = Task::Classification;
  ds.num_classes = static_cast<int>(skip_lengths.size());
  for (std::size_t k = 0; k < skip_lengths.size(); ++k) {
    const int s = skip_lengths[k];
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i) {
      edges.emplace_back(i, (i + 1) % n);
      edges.emplace_back(i, (i + s) % n);
    }
    const Graph base = from_edge_list(n, edges);
    for (int c = 0; c < copies_per_class; ++c) {
      Graph g = permute_graph(base, rng.permutation(n));
      if (random_feature_dim > 0) {
        g.node_features = Matrix(n, random_feature_dim);
        for (double& x : g.node_features.data) x = rng.normal();
      } else if (random_feature_dim < 0) {
        Eigen::MatrixXd gauss(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) gauss(i, j) = rng.normal();
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
        g.node_features = Matrix(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) g.node_features(i, j) = q(i, j);
      } else {
        g.node_features = Matrix(n, 1, 1.0);
      }
      g.graph_label = static_cast<int>(k);
      ds.graphs.push_back(std::move(g));
    }
  }
  ds.train_idx.resize(ds.graphs.size());
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), 0);
  return ds;
}

}  // namespace fn
