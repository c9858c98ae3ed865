#pragma once

#include <cstdint>
#include <vector>

#include "fn/graph.hpp"

namespace fn {

// G(n, p): each unordered pair is an edge independently with probability p.
// Deterministic per seed; sparse regimes use geometric pair skipping.
Graph erdos_renyi(int n, double p, std::uint64_t seed);

// Complete binary trees of depth r. Leaves carry distinct class ids and a
// permuted attribute value, the root carries the query attribute, and the
// root's label is the class of the leaf whose attribute matches the query.
// Labels are uniform over leaves. Task: node classification scored at roots.
Dataset tree_neighbours_match(int depth, int samples, std::uint64_t seed);

// Circular-skip-link graphs: a cycle on n nodes plus skip links i ~ i+s.
// One class per skip length, `copies_per_class` randomly permuted isomorphic
// copies each. Every node has degree 4. Feature modes:
//   random_feature_dim > 0   i.i.d. standard-normal features of that width
//   random_feature_dim == 0  constant scalar 1
//   random_feature_dim < 0   rows of a fresh random orthonormal n x n frame
Dataset csl_graphs(int n, const std::vector<int>& skip_lengths, int copies_per_class,
                   std::uint64_t seed, int random_feature_dim = 0);

// The benchmark skip set for n = 41.
std::vector<int> csl_default_skips();

}  // namespace fn
