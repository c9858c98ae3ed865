#pragma once

#include "fn/graph.hpp"
#include "fn/matrix.hpp"
#include "fn/partition.hpp"

namespace fn {

// Eigenvectors of the k smallest nonzero normalized-Laplacian eigenvalues,
// zero-padded for small graphs. Sign flips happen at batch time.
Matrix lap_pe(const Graph& g, int k);

// Random-walk structural encoding: diagonals of (D^-1 A)^t for t = 1..k.
Matrix rwse(const Graph& g, int k);

// Fractal-node positional encoding: eigenvectors of the k smallest nonzero
// eigenvalues of the weighted Laplacian of the coarsened adjacency
// (edge-count mode, diagonal ignored), zero-padded.
Matrix fractal_pe_matrix(const Matrix& coarse_adj, int k);

}  // namespace fn
