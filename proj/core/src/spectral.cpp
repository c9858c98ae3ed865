#include "fn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <queue>
#include <stack>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "fn/rng.hpp"

namespace fn {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<int>(e.rows()), static_cast<int>(e.cols()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) = e(i, j);
  return m;
}

}  // namespace

Matrix laplacian(const Graph& g, bool normalized, int dense_cap) {
  if (g.num_nodes > dense_cap)
    throw std::invalid_argument(
        "laplacian: graph has " + std::to_string(g.num_nodes) + " nodes, above the dense cap of " +
        std::to_string(dense_cap) + "; use the conjugate-gradient sampling path instead");
  Matrix l(g.num_nodes, g.num_nodes);
  if (!normalized) {
    for (int v = 0; v < g.num_nodes; ++v) {
      l(v, v) = g.degree(v);
      for (int u : g.neighbors_of(v)) l(v, u) = -1.0;
    }
  } else {
    for (int v = 0; v < g.num_nodes; ++v) {
      if (g.degree(v) > 0) l(v, v) = 1.0;
      for (int u : g.neighbors_of(v))
        l(v, u) = -1.0 / std::sqrt(static_cast<double>(g.degree(v)) * static_cast<double>(g.degree(u)));
    }
  }
  return l;
}

Matrix pseudoinverse(const Matrix& m, double rank_tol) {
  if (m.rows != m.cols) throw std::invalid_argument("pseudoinverse: matrix not square");
  if (!is_symmetric(m, 1e-9)) throw std::invalid_argument("pseudoinverse: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  if (es.info() != Eigen::Success) throw std::runtime_error("pseudoinverse: eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double max_abs = ev.cwiseAbs().maxCoeff();
  const double cutoff = rank_tol * std::max(max_abs, 1e-300);
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    inv(i) = std::abs(ev(i)) > cutoff ? 1.0 / ev(i) : 0.0;
  Eigen::MatrixXd p = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return from_eigen(p);
}

namespace {

// Jacobi-preconditioned CG for L x = b restricted to the connected component
// of the right-hand side, with repeated projection onto the zero-mean
// subspace of that component.
double resistance_cg(const Graph& g, int u, int v) {
  const auto comp = bfs_levels(g, u);
  std::vector<int> nodes;
  for (int i = 0; i < g.num_nodes; ++i)
    if (comp[static_cast<std::size_t>(i)] >= 0) nodes.push_back(i);
  std::vector<int> local(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
  const int n = static_cast<int>(nodes.size());

  auto apply_l = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) {
      const int gv = nodes[static_cast<std::size_t>(i)];
      double acc = static_cast<double>(g.degree(gv)) * x[static_cast<std::size_t>(i)];
      for (int nb : g.neighbors_of(gv)) acc -= x[static_cast<std::size_t>(local[static_cast<std::size_t>(nb)])];
      y[static_cast<std::size_t>(i)] = acc;
    }
  };
  auto project = [&](std::vector<double>& x) {
    double mean = 0.0;
    for (double t : x) mean += t;
    mean /= n;
    for (double& t : x) t -= mean;
  };

  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  b[static_cast<std::size_t>(local[static_cast<std::size_t>(u)])] = 1.0;
  b[static_cast<std::size_t>(local[static_cast<std::size_t>(v)])] = -1.0;
  project(b);

  std::vector<double> x(static_cast<std::size_t>(n), 0.0), r = b, z(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n)), ap(static_cast<std::size_t>(n));
  auto precond = [&](const std::vector<double>& rr, std::vector<double>& zz) {
    for (int i = 0; i < n; ++i) {
      const double d = std::max(1.0, static_cast<double>(g.degree(nodes[static_cast<std::size_t>(i)])));
      zz[static_cast<std::size_t>(i)] = rr[static_cast<std::size_t>(i)] / d;
    }
    project(zz);
  };
  precond(r, z);
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
  const double b_norm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  const int max_iter = 20 * n + 100;
  for (int it = 0; it < max_iter; ++it) {
    apply_l(p, ap);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[static_cast<std::size_t>(i)] * ap[static_cast<std::size_t>(i)];
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= alpha * ap[static_cast<std::size_t>(i)];
    }
    project(r);
    const double r_norm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    if (r_norm <= 1e-12 * std::max(1.0, b_norm)) break;
    precond(r, z);
    double rz_next = 0.0;
    for (int i = 0; i < n; ++i) rz_next += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
  }
  return x[static_cast<std::size_t>(local[static_cast<std::size_t>(u)])] - x[static_cast<std::size_t>(local[static_cast<std::size_t>(v)])];
}

}  // namespace

double effective_resistance(const Graph& g, int u, int v, int dense_cap) {
  if (u < 0 || u >= g.num_nodes || v < 0 || v >= g.num_nodes)
    throw std::invalid_argument("effective_resistance: node out of range");
  if (u == v) return 0.0;
  const auto lv = bfs_levels(g, u);
  if (lv[static_cast<std::size_t>(v)] < 0)
    throw std::invalid_argument("effective_resistance: nodes lie in different components (infinite resistance)");
  if (g.num_nodes > dense_cap) return resistance_cg(g, u, v);
  const Matrix p = pseudoinverse(laplacian(g, false, dense_cap));
  return p(u, u) + p(v, v) - 2.0 * p(u, v);
}

Matrix augmented_laplacian(const Graph& g, const Partition& p) {
  p.validate(g);
  const int n = g.num_nodes;
  const int order = n + p.C;
  Matrix l(order, order);
  for (int v = 0; v < n; ++v) {
    l(v, v) = g.degree(v);
    for (int u : g.neighbors_of(v)) l(v, u) = -1.0;
  }
  for (int i = 0; i < p.C; ++i) {
    const int f = n + i;
    for (int v : p.blocks[static_cast<std::size_t>(i)]) {
      l(v, f) = -1.0;
      l(f, v) = -1.0;
      l(v, v) += 1.0;
      l(f, f) += 1.0;
    }
  }
  return l;
}

double total_resistance(const Graph& g, int dense_cap) {
  if (!is_connected(g)) throw std::invalid_argument("total_resistance: graph disconnected");
  const Matrix p = pseudoinverse(laplacian(g, false, dense_cap));
  double tr = 0.0;
  for (int i = 0; i < p.rows; ++i) tr += p(i, i);
  return g.num_nodes * tr;
}

ResistanceReport resistance_report(const Graph& g, const Partition& p, int sample_pairs,
                                   std::uint64_t seed, int dense_cap) {
  if (!is_connected(g)) throw std::invalid_argument("resistance_report: graph disconnected");
  if (g.num_nodes + p.C > dense_cap)
    throw std::invalid_argument("resistance_report: augmented order above dense cap");
  const int n = g.num_nodes;
  const Matrix pinv = pseudoinverse(laplacian(g, false, dense_cap));
  const Matrix pinv_f = pseudoinverse(augmented_laplacian(g, p));

  ResistanceReport report;
  report.C = p.C;
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += pinv(i, i);
  report.total_R = n * tr;
  // Restricted to original-node pairs: sum_{u<v} R_f = n * tr_o(P) - 1_o^T P 1_o.
  double tr_f = 0.0, ones_f = 0.0;
  for (int i = 0; i < n; ++i) {
    tr_f += pinv_f(i, i);
    for (int j = 0; j < n; ++j) ones_f += pinv_f(i, j);
  }
  report.total_R_f = n * tr_f - ones_f;

  auto pair_res = [&](int u, int v) {
    ResistancePair rp;
    rp.u = u;
    rp.v = v;
    rp.R = pinv(u, u) + pinv(v, v) - 2.0 * pinv(u, v);
    rp.R_f = pinv_f(u, u) + pinv_f(v, v) - 2.0 * pinv_f(u, v);
    if (rp.R_f > rp.R + 1e-6)
      throw std::logic_error("resistance_report: R_f exceeds R beyond tolerance at pair (" +
                             std::to_string(u) + "," + std::to_string(v) + ")");
    return rp;
  };

  const std::int64_t all_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (sample_pairs <= 0 || sample_pairs >= all_pairs) {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) report.pairs.push_back(pair_res(u, v));
  } else {
    Rng rng = Rng(seed).stream("resistance_pairs");
    for (int s = 0; s < sample_pairs; ++s) {
      const int u = static_cast<int>(rng.uniform_int(n));
      int v = static_cast<int>(rng.uniform_int(n - 1));
      if (v >= u) v++;
      report.pairs.push_back(pair_res(std::min(u, v), std::max(u, v)));
    }
  }
  return report;
}

DcCheckResult dc_check(const Matrix& features) {
  if (features.rows < 1) throw std::invalid_argument("dc_check: need at least one row");
  const int n = features.rows, d = features.cols;
  DcCheckResult out;
  out.mean_pool.assign(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    for (int v = 0; v < n; ++v) out.mean_pool[static_cast<std::size_t>(j)] += features(v, j);
    out.mean_pool[static_cast<std::size_t>(j)] /= n;
  }

  // Full forward DFT along the node axis, zero all non-DC bins, invert.
  using cd = std::complex<double>;
  const double two_pi = 6.283185307179586476925286766559;
  std::vector<cd> spectrum(static_cast<std::size_t>(n));
  out.dft_dc.assign(static_cast<std::size_t>(d), 0.0);
  out.max_abs_diff = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < n; ++k) {
      cd acc(0.0, 0.0);
      for (int v = 0; v < n; ++v) {
        const double ang = -two_pi * k * v / n;
        acc += features(v, j) * cd(std::cos(ang), std::sin(ang));
      }
      spectrum[static_cast<std::size_t>(k)] = acc;
    }
    for (int k = 1; k < n; ++k) spectrum[static_cast<std::size_t>(k)] = cd(0.0, 0.0);
    for (int v = 0; v < n; ++v) {
      cd acc(0.0, 0.0);
      for (int k = 0; k < n; ++k) {
        const double ang = two_pi * k * v / n;
        acc += spectrum[static_cast<std::size_t>(k)] * cd(std::cos(ang), std::sin(ang));
      }
      const double rec = acc.real() / n;
      if (v == 0) out.dft_dc[static_cast<std::size_t>(j)] = rec;
      out.max_abs_diff = std::max(out.max_abs_diff, std::abs(rec - out.mean_pool[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

std::vector<double> betweenness(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<double> cb(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  std::vector<std::int64_t> sigma(static_cast<std::size_t>(n));
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::vector<double> delta(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::stack<int> order;
    for (auto& pv : pred) pv.clear();
    std::fill(sigma.begin(), sigma.end(), 0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[static_cast<std::size_t>(s)] = 1;
    dist[static_cast<std::size_t>(s)] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push(v);
      for (int w : g.neighbors_of(v)) {
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
          q.push(w);
        }
        if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
          sigma[static_cast<std::size_t>(w)] += sigma[static_cast<std::size_t>(v)];
          pred[static_cast<std::size_t>(w)].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    while (!order.empty()) {
      const int w = order.top();
      order.pop();
      for (int v : pred[static_cast<std::size_t>(w)])
        delta[static_cast<std::size_t>(v)] += static_cast<double>(sigma[static_cast<std::size_t>(v)]) /
                                              static_cast<double>(sigma[static_cast<std::size_t>(w)]) *
                                              (1.0 + delta[static_cast<std::size_t>(w)]);
      if (w != s) cb[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
    }
  }
  for (double& x : cb) x /= 2.0;  // undirected: count each pair once
  return cb;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

namespace {

// Centrality distributions are compared across graph scales, so each sample
// is normalized by its own pair count (n-1)(n-2)/2 before the KS statistic.
std::vector<double> normalized_betweenness(const Graph& g) {
  std::vector<double> b = betweenness(g);
  const double pairs = 0.5 * (g.num_nodes - 1.0) * (g.num_nodes - 2.0);
  if (pairs > 0.0)
    for (double& x : b) x /= pairs;
  return b;
}

}  // namespace

double ks_similarity(const Graph& g, const Partition& p) {
  const std::vector<double> full = normalized_betweenness(g);
  double best = 0.0;
  for (const auto& blk : p.blocks) {
    if (blk.empty()) throw std::invalid_argument("ks_similarity: empty block");
    const Graph sub = induced_subgraph(g, blk);
    const std::vector<double> local = normalized_betweenness(sub);
    const double d = ks_statistic(full, local);
    best = std::max(best, 1.0 - d);
  }
  return best;
}

}  // namespace fn
