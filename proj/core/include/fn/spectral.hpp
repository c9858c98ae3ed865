#pragma once

#include <cstdint>
#include <vector>

#include "fn/graph.hpp"
#include "fn/matrix.hpp"
#include "fn/partition.hpp"

namespace fn {

inline constexpr int kDefaultDenseCap = 2000;

// Combinatorial Laplacian D - A, or the symmetric-normalized
// I - D^{-1/2} A D^{-1/2}. Graphs above the dense cap are rejected with a
// pointer to the sampled conjugate-gradient path.
Matrix laplacian(const Graph& g, bool normalized, int dense_cap = kDefaultDenseCap);

// Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition,
// inverting eigenvalues above rank_tol * max|sigma|.
Matrix pseudoinverse(const Matrix& m, double rank_tol = 1e-10);

// Effective resistance (1_u - 1_v)^T L^+ (1_u - 1_v) on the combinatorial
// Laplacian. Nodes in different components raise std::invalid_argument
// (infinite resistance). Beyond the dense cap, pairwise values come from
// conjugate-gradient solves on L projected onto the zero-mean subspace.
double effective_resistance(const Graph& g, int u, int v, int dense_cap = kDefaultDenseCap);

// Combinatorial Laplacian of the augmented graph G_f, order n + C: fractal
// node i is joined by unit-weight edges to every node of blocks[i].
Matrix augmented_laplacian(const Graph& g, const Partition& p);

// Sum of effective resistances over all node pairs, n * tr(L^+).
double total_resistance(const Graph& g, int dense_cap = kDefaultDenseCap);

struct ResistancePair {
  int u = 0, v = 0;
  double R = 0.0;
  double R_f = 0.0;
};

struct ResistanceReport {
  std::vector<ResistancePair> pairs;
  double total_R = 0.0;    // over original-node pairs of G
  double total_R_f = 0.0;  // over original-node pairs of G_f
  int C = 0;
};

// Per-pair (R, R_f) for sampled original-node pairs plus total resistances.
// sample_pairs <= 0 reports every pair. Asserts R_f <= R + tolerance.
ResistanceReport resistance_report(const Graph& g, const Partition& p, int sample_pairs,
                                   std::uint64_t seed, int dense_cap = kDefaultDenseCap);

struct DcCheckResult {
  std::vector<double> mean_pool;  // column means
  std::vector<double> dft_dc;     // DC-only reconstruction, any row
  double max_abs_diff = 0.0;
};

// Compares mean pooling against the DC component extracted through an
// explicit discrete Fourier transform along the node axis.
DcCheckResult dc_check(const Matrix& features);

// Brandes betweenness centrality, unnormalized, each unordered pair counted
// once.
std::vector<double> betweenness(const Graph& g);

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Structural similarity score max_i (1 - D_i), where D_i compares the
// full-graph betweenness distribution against the betweenness distribution of
// block i's induced subgraph.
double ks_similarity(const Graph& g, const Partition& p);

}  // namespace fn
