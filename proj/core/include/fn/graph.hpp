#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fn/matrix.hpp"

namespace fn {

// Immutable undirected graph in compressed sparse row form. Neighbor lists
// are sorted and duplicate-free, self-loops are rejected at ingestion, and
// (u,v) is stored iff (v,u) is stored. Edge features are aligned to the
// directed edge order (CSR position) and equal in both directions.
struct Graph {
  int num_nodes = 0;
  std::vector<std::int64_t> offsets;  // size num_nodes + 1
  std::vector<int> neighbors;         // sorted per node
  std::vector<int> degrees;           // derived from offsets

  Matrix node_features;  // n x d_in, or empty
  Matrix edge_features;  // |E_dir| x d_e aligned to CSR order, or empty

  std::vector<int> node_labels;      // empty, or size n with -1 = unlabeled
  int graph_label = -1;              // classification target, -1 = none
  std::vector<double> graph_target;  // regression / multilabel targets

  int degree(int v) const { return degrees[static_cast<std::size_t>(v)]; }

  std::span<const int> neighbors_of(int v) const {
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(v) + 1]);
    return {neighbors.data() + b, e - b};
  }

  std::int64_t num_directed_edges() const { return static_cast<std::int64_t>(neighbors.size()); }
  std::int64_t num_edges() const { return num_directed_edges() / 2; }

  // CSR position of directed edge (u,v), or -1 when absent.
  std::int64_t edge_index(int u, int v) const;

  bool has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

  // Checks all structural invariants; throws std::logic_error on violation.
  void validate() const;
};

// Builds a symmetric CSR graph from an undirected edge list. Duplicate edges
// collapse; out-of-range endpoints and self-loops raise std::invalid_argument.
Graph from_edge_list(int n, std::span<const std::pair<int, int>> edges,
                     const Matrix* node_features = nullptr);

inline Graph from_edge_list(int n, const std::vector<std::pair<int, int>>& edges,
                            const Matrix* node_features = nullptr) {
  return from_edge_list(n, std::span<const std::pair<int, int>>(edges), node_features);
}

// BFS distances from source; unreachable nodes get +infinity.
std::vector<double> bfs_distances(const Graph& g, int source);

// Integer BFS levels with -1 for unreachable; used by the partitioner and
// k-hop expansion hot paths.
std::vector<int> bfs_levels(const Graph& g, int source);

bool is_connected(const Graph& g);

// Relabels nodes: node v of the input becomes perm[v] of the output.
// Features and labels move with their nodes.
Graph permute_graph(const Graph& g, const std::vector<int>& perm);

// Node-induced subgraph with local ids following the order of `nodes`.
Graph induced_subgraph(const Graph& g, std::span<const int> nodes);

// Disjoint union of graphs; `node_offset[i]` receives the id shift of graph i.
Graph disjoint_union(std::span<const Graph> graphs, std::vector<int>* node_offset = nullptr);

enum class Task { Classification, Multilabel, Regression, NodeClassification };

struct Dataset {
  std::vector<Graph> graphs;
  std::vector<int> train_idx, val_idx, test_idx;
  Task task = Task::Classification;
  int num_classes = 0;  // classification tasks
  int target_dim = 0;   // regression / multilabel width

  void validate() const;
};

}  // namespace fn
