#include "fn/positional.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "fn/spectral.hpp"

namespace fn {

namespace {

// Columns of `vecs` whose eigenvalues exceed the zero cutoff, ascending,
// zero-padded to k columns.
Matrix smallest_nonzero_eigenvectors(const Eigen::MatrixXd& m, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("pe: eigendecomposition failed");
  const auto& ev = es.eigenvalues();
  const double cutoff = 1e-8 * std::max(1.0, std::abs(ev(ev.size() - 1)));
  Matrix out(static_cast<int>(m.rows()), k);
  int col = 0;
  for (Eigen::Index i = 0; i < ev.size() && col < k; ++i) {
    if (ev(i) <= cutoff) continue;
    for (int r = 0; r < out.rows; ++r) out(r, col) = es.eigenvectors()(r, i);
    ++col;
  }
  return out;
}

}  // namespace

Matrix lap_pe(const Graph& g, int k) {
  if (k <= 0) return Matrix();
  const Matrix l = laplacian(g, true);
  Eigen::MatrixXd e(l.rows, l.cols);
  for (int i = 0; i < l.rows; ++i)
    for (int j = 0; j < l.cols; ++j) e(i, j) = l(i, j);
  return smallest_nonzero_eigenvectors(e, k);
}

Matrix rwse(const Graph& g, int k) {
  if (k <= 0) return Matrix();
  if (g.num_nodes > kDefaultDenseCap)
    throw std::invalid_argument("rwse: graph above dense cap");
  const int n = g.num_nodes;
  // P = D^-1 A; isolated nodes keep an all-zero row.
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    if (g.degree(v) == 0) continue;
    const double inv = 1.0 / g.degree(v);
    for (int u : g.neighbors_of(v)) p(v, u) = inv;
  }
  Matrix out(n, k);
  Eigen::MatrixXd m = p;
  for (int t = 0; t < k; ++t) {
    for (int v = 0; v < n; ++v) out(v, t) = m(v, v);
    if (t + 1 < k) m = m * p;
  }
  return out;
}

Matrix fractal_pe_matrix(const Matrix& coarse_adj, int k) {
  if (k <= 0) return Matrix();
  const int c = coarse_adj.rows;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(c, c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      if (i == j) continue;  // internal-edge diagonal carries no coupling
      const double w = coarse_adj(i, j);
      lap(i, j) -= w;
      lap(i, i) += w;
    }
  }
  return smallest_nonzero_eigenvectors(lap, k);
}

}  // namespace fn
