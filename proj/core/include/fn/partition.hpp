#pragma once

#include <cstdint>
#include <vector>

#include "fn/graph.hpp"
#include "fn/matrix.hpp"

namespace fn {

// C-way node partition: a disjoint covering base assignment plus the
// (possibly k-hop expanded, possibly overlapping) block membership lists.
// Every expanded block is a superset of its base block.
struct Partition {
  int C = 0;
  int k_hop = 0;
  std::vector<int> base_assignment;      // node -> block id in [0, C)
  std::vector<std::vector<int>> blocks;  // sorted member lists, expanded

  // C x n boolean membership matrix derived from blocks.
  Matrix membership(int num_nodes) const;

  void validate(const Graph& g) const;  // throws std::logic_error
};

// Multilevel C-way partitioner: heavy-edge-matching coarsening down to
// max(4C, 64) nodes, greedy graph-growing initial assignment, then
// uncoarsening with boundary refinement that minimizes edge cut under the
// balance constraint max block size <= (1+balance_eps) * ceil(n/C).
// Deterministic per seed.
Partition partition_multilevel(const Graph& g, int C, double balance_eps, std::uint64_t seed);

inline Partition partition_multilevel(const Graph& g, int C, std::uint64_t seed) {
  return partition_multilevel(g, C, 0.1, seed);
}

// Uniform random assignment, rebalanced so every block is nonempty.
Partition partition_random(const Graph& g, int C, std::uint64_t seed);

// Louvain modularity optimization, then communities are merged smallest-first
// or split by BFS until exactly C_target blocks exist.
Partition partition_louvain(const Graph& g, int C_target, std::uint64_t seed);

// Grows C balanced regions from BFS-spread seed nodes.
Partition partition_bfs(const Graph& g, int C, std::uint64_t seed);

// Expands every block by its distance-<=k neighborhood. Base assignments are
// unchanged; blocks(k) is monotone in k.
Partition expand_k_hop(const Graph& g, const Partition& p, int k);

// Number of undirected edges whose endpoints have different base assignments.
std::int64_t edge_cut(const Graph& g, const Partition& p);

enum class CoarseMode {
  EdgeCount,    // M A M^T on base blocks: entry (i,j) counts edges between blocks
  SharedNodes,  // M M^T on expanded blocks: entry (i,j) counts shared members
};

// C x C coarsened adjacency. In edge-count mode the diagonal holds twice the
// internal edge count of each block.
Matrix coarsened_adjacency(const Graph& g, const Partition& p,
                           CoarseMode mode = CoarseMode::EdgeCount);

// Newman modularity of the base assignment (used by Louvain and its tests).
double modularity(const Graph& g, const std::vector<int>& assignment);

}  // namespace fn
