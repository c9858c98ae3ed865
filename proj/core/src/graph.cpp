#include "fn/graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace fn {

std::int64_t Graph::edge_index(int u, int v) const {
  const auto b = offsets[static_cast<std::size_t>(u)];
  const auto e = offsets[static_cast<std::size_t>(u) + 1];
  auto first = neighbors.begin() + b;
  auto last = neighbors.begin() + e;
  auto it = std::lower_bound(first, last, v);
  if (it == last || *it != v) return -1;
  return b + (it - first);
}

void Graph::validate() const {
  if (static_cast<int>(offsets.size()) != num_nodes + 1)
    throw std::logic_error("graph: offsets size mismatch");
  if (offsets.front() != 0 || offsets.back() != static_cast<std::int64_t>(neighbors.size()))
    throw std::logic_error("graph: offsets do not span neighbor array");
  for (int v = 0; v < num_nodes; ++v) {
    if (offsets[v] > offsets[v + 1]) throw std::logic_error("graph: offsets not nondecreasing");
    auto nb = neighbors_of(v);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] < 0 || nb[i] >= num_nodes) throw std::logic_error("graph: neighbor out of range");
      if (nb[i] == v) throw std::logic_error("graph: self-loop stored");
      if (i > 0 && nb[i - 1] >= nb[i]) throw std::logic_error("graph: neighbors unsorted or duplicated");
      if (edge_index(nb[i], v) < 0) throw std::logic_error("graph: missing reverse edge");
    }
    if (degrees[v] != static_cast<int>(nb.size())) throw std::logic_error("graph: degree mismatch");
  }
  if (!edge_features.empty()) {
    if (edge_features.rows != static_cast<int>(neighbors.size()))
      throw std::logic_error("graph: edge feature rows != directed edge count");
    for (int v = 0; v < num_nodes; ++v) {
      for (int u : neighbors_of(v)) {
        const auto f = edge_index(v, u);
        const auto r = edge_index(u, v);
        for (int j = 0; j < edge_features.cols; ++j)
          if (edge_features(static_cast<int>(f), j) != edge_features(static_cast<int>(r), j))
            throw std::logic_error("graph: asymmetric edge features");
      }
    }
  }
  if (!node_features.empty() && node_features.rows != num_nodes)
    throw std::logic_error("graph: node feature rows != num_nodes");
}

Graph from_edge_list(int n, std::span<const std::pair<int, int>> edges,
                     const Matrix* node_features) {
  if (n < 0) throw std::invalid_argument("from_edge_list: negative node count");
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("from_edge_list: endpoint out of range: (" +
                                  std::to_string(u) + "," + std::to_string(v) + ")");
    if (u == v)
      throw std::invalid_argument("from_edge_list: self-loop rejected at node " + std::to_string(u));
    adj[static_cast<std::size_t>(u)].insert(v);
    adj[static_cast<std::size_t>(v)].insert(u);
  }
  Graph g;
  g.num_nodes = n;
  g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int v = 0; v < n; ++v) g.offsets[static_cast<std::size_t>(v) + 1] = g.offsets[v] + static_cast<std::int64_t>(adj[v].size());
  g.neighbors.reserve(static_cast<std::size_t>(g.offsets.back()));
  g.degrees.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    g.degrees[static_cast<std::size_t>(v)] = static_cast<int>(adj[static_cast<std::size_t>(v)].size());
    for (int u : adj[static_cast<std::size_t>(v)]) g.neighbors.push_back(u);
  }
  if (node_features != nullptr && !node_features->empty()) {
    if (node_features->rows != n)
      throw std::invalid_argument("from_edge_list: node feature rows != n");
    g.node_features = *node_features;
  }
  return g;
}

std::vector<int> bfs_levels(const Graph& g, int source) {
  if (source < 0 || source >= g.num_nodes)
    throw std::invalid_argument("bfs: source out of range");
  std::vector<int> dist(static_cast<std::size_t>(g.num_nodes), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(source)] = 0;
  q.push(source);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : g.neighbors_of(v)) {
      if (dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
        q.push(u);
      }
    }
  }
  return dist;
}

std::vector<double> bfs_distances(const Graph& g, int source) {
  const auto lv = bfs_levels(g, source);
  std::vector<double> dist(lv.size());
  for (std::size_t i = 0; i < lv.size(); ++i)
    dist[i] = lv[i] < 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(lv[i]);
  return dist;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes == 0) return true;
  const auto lv = bfs_levels(g, 0);
  return std::none_of(lv.begin(), lv.end(), [](int d) { return d < 0; });
}

Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.num_nodes)
    throw std::invalid_argument("permute_graph: perm size mismatch");
  std::vector<int> inv(perm.size());
  for (int v = 0; v < g.num_nodes; ++v) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] = v;

  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(g.num_edges()));
  for (int v = 0; v < g.num_nodes; ++v)
    for (int u : g.neighbors_of(v))
      if (v < u) edges.emplace_back(perm[static_cast<std::size_t>(v)], perm[static_cast<std::size_t>(u)]);
  Graph out = from_edge_list(g.num_nodes, edges);

  if (!g.node_features.empty()) {
    out.node_features = Matrix(g.num_nodes, g.node_features.cols);
    for (int v = 0; v < g.num_nodes; ++v)
      for (int j = 0; j < g.node_features.cols; ++j)
        out.node_features(perm[static_cast<std::size_t>(v)], j) = g.node_features(v, j);
  }
  if (!g.edge_features.empty()) {
    out.edge_features = Matrix(static_cast<int>(out.neighbors.size()), g.edge_features.cols);
    for (int v = 0; v < g.num_nodes; ++v) {
      for (int u : g.neighbors_of(v)) {
        const auto src = g.edge_index(v, u);
        const auto dst = out.edge_index(perm[static_cast<std::size_t>(v)], perm[static_cast<std::size_t>(u)]);
        for (int j = 0; j < g.edge_features.cols; ++j)
          out.edge_features(static_cast<int>(dst), j) = g.edge_features(static_cast<int>(src), j);
      }
    }
  }
  if (!g.node_labels.empty()) {
    out.node_labels.assign(static_cast<std::size_t>(g.num_nodes), -1);
    for (int v = 0; v < g.num_nodes; ++v)
      out.node_labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] = g.node_labels[static_cast<std::size_t>(v)];
  }
  out.graph_label = g.graph_label;
  out.graph_target = g.graph_target;
  return out;
}

Graph induced_subgraph(const Graph& g, std::span<const int> nodes) {
  std::vector<int> local(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int u : g.neighbors_of(nodes[i])) {
      const int lu = local[static_cast<std::size_t>(u)];
      if (lu >= 0 && static_cast<int>(i) < lu) edges.emplace_back(static_cast<int>(i), lu);
    }
  }
  Graph out = from_edge_list(static_cast<int>(nodes.size()), edges);
  if (!g.node_features.empty()) {
    out.node_features = Matrix(out.num_nodes, g.node_features.cols);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (int j = 0; j < g.node_features.cols; ++j)
        out.node_features(static_cast<int>(i), j) = g.node_features(nodes[i], j);
  }
  return out;
}

Graph disjoint_union(std::span<const Graph> graphs, std::vector<int>* node_offset) {
  Graph out;
  std::int64_t total_nodes = 0, total_dir_edges = 0;
  int feat_cols = 0, edge_cols = 0;
  bool any_node_labels = false;
  for (const auto& g : graphs) {
    total_nodes += g.num_nodes;
    total_dir_edges += g.num_directed_edges();
    feat_cols = std::max(feat_cols, g.node_features.cols);
    edge_cols = std::max(edge_cols, g.edge_features.cols);
    any_node_labels = any_node_labels || !g.node_labels.empty();
  }
  out.num_nodes = static_cast<int>(total_nodes);
  out.offsets.reserve(static_cast<std::size_t>(total_nodes) + 1);
  out.offsets.push_back(0);
  out.neighbors.reserve(static_cast<std::size_t>(total_dir_edges));
  out.degrees.reserve(static_cast<std::size_t>(total_nodes));
  if (feat_cols > 0) out.node_features = Matrix(out.num_nodes, feat_cols);
  if (edge_cols > 0) out.edge_features = Matrix(static_cast<int>(total_dir_edges), edge_cols);
  if (any_node_labels) out.node_labels.assign(static_cast<std::size_t>(total_nodes), -1);
  if (node_offset != nullptr) node_offset->clear();

  int base = 0;
  std::int64_t edge_base = 0;
  for (const auto& g : graphs) {
    if (node_offset != nullptr) node_offset->push_back(base);
    for (int v = 0; v < g.num_nodes; ++v) {
      for (int u : g.neighbors_of(v)) out.neighbors.push_back(u + base);
      out.offsets.push_back(out.offsets.back() + g.degree(v));
      out.degrees.push_back(g.degree(v));
    }
    if (!g.node_features.empty())
      for (int v = 0; v < g.num_nodes; ++v)
        for (int j = 0; j < g.node_features.cols; ++j)
          out.node_features(base + v, j) = g.node_features(v, j);
    if (!g.edge_features.empty())
      for (std::int64_t e = 0; e < g.num_directed_edges(); ++e)
        for (int j = 0; j < g.edge_features.cols; ++j)
          out.edge_features(static_cast<int>(edge_base + e), j) = g.edge_features(static_cast<int>(e), j);
    if (!g.node_labels.empty())
      for (int v = 0; v < g.num_nodes; ++v)
        out.node_labels[static_cast<std::size_t>(base + v)] = g.node_labels[static_cast<std::size_t>(v)];
    base += g.num_nodes;
    edge_base += g.num_directed_edges();
  }
  return out;
}

void Dataset::validate() const {
  const int n = static_cast<int>(graphs.size());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto* split : {&train_idx, &val_idx, &test_idx}) {
    for (int i : *split) {
      if (i < 0 || i >= n) throw std::logic_error("dataset: split index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw std::logic_error("dataset: split indices not disjoint");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
}

}  // namespace fn
