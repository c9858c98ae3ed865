#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fn/generators.hpp"
#include "fn/rng.hpp"
#include "fn/spectral.hpp"
#include "oracles.hpp"

using namespace fn;

namespace {

Graph cycle(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return from_edge_list(n, e);
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

Matrix all_pairs_resistance(const Graph& g) {
  const Matrix p = pseudoinverse(laplacian(g, false));
  Matrix r(g.num_nodes, g.num_nodes);
  for (int u = 0; u < g.num_nodes; ++u)
    for (int v = 0; v < g.num_nodes; ++v) r(u, v) = p(u, u) + p(v, v) - 2.0 * p(u, v);
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("laplacian of P2 and K3") {
  const Graph p2 = from_edge_list(2, {{0, 1}});
  const Matrix l = laplacian(p2, false);
  CHECK(l(0, 0) == 1.0);
  CHECK(l(0, 1) == -1.0);
  CHECK(l(1, 0) == -1.0);
  CHECK(l(1, 1) == 1.0);

  const Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(laplacian(k3, false)));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(3.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(3.0));
}

TEST_CASE("combinatorial laplacian rows sum to zero") {
  const Graph g = erdos_renyi(40, 0.15, 3);
  const Matrix l = laplacian(g, false);
  for (int i = 0; i < l.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < l.cols; ++j) s += l(i, j);
    CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("normalized laplacian eigenvalues lie in [0,2]") {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const Graph g = erdos_renyi(30, 0.15, rng.next());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(laplacian(g, true)));
    CHECK(es.eigenvalues()(0) > -1e-9);
    CHECK(es.eigenvalues()(es.eigenvalues().size() - 1) < 2.0 + 1e-9);
  }
}

TEST_CASE("laplacian dense cap error") {
  const Graph g = erdos_renyi(30, 0.1, 1);
  CHECK_THROWS_AS(laplacian(g, false, 10), std::invalid_argument);
}

TEST_CASE("pseudoinverse basics") {
  Matrix id = Matrix::identity(4);
  const Matrix p = pseudoinverse(id);
  for (int i = 0; i < 4; ++i) CHECK(p(i, i) == doctest::Approx(1.0));

  Matrix d(2, 2);
  d(1, 1) = 2.0;
  const Matrix dp = pseudoinverse(d);
  CHECK(dp(0, 0) == doctest::Approx(0.0));
  CHECK(dp(1, 1) == doctest::Approx(0.5));

  Matrix bad(2, 2);
  bad(0, 1) = 1.0;  // not symmetric
  CHECK_THROWS_AS(pseudoinverse(bad), std::invalid_argument);
}

TEST_CASE("pseudoinverse satisfies L L+ L = L") {
  Rng rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const Graph g = erdos_renyi(25, 0.15, rng.next());
    const Matrix l = laplacian(g, false);
    const Matrix p = pseudoinverse(l);
    const Eigen::MatrixXd le = to_eigen(l);
    const Eigen::MatrixXd res = le * to_eigen(p) * le - le;
    CHECK(res.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("effective resistance on tiny graphs") {
  const Graph p2 = from_edge_list(2, {{0, 1}});
  CHECK(effective_resistance(p2, 0, 1) == doctest::Approx(1.0));

  const Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(effective_resistance(k3, 0, 2) == doctest::Approx(2.0 / 3.0));

  const Graph c4 = cycle(4);
  CHECK(effective_resistance(c4, 0, 1) == doctest::Approx(3.0 / 4.0));
  CHECK(effective_resistance(c4, 1, 1) == 0.0);

  const Graph disc = from_edge_list(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(effective_resistance(disc, 0, 2), std::invalid_argument);
}

TEST_CASE("effective resistance is a metric on connected graphs") {
  Rng rng(19);
  for (int trial = 0; trial < 4; ++trial) {
    Graph g = erdos_renyi(14, 0.3, rng.next());
    if (!is_connected(g)) continue;
    const Matrix r = all_pairs_resistance(g);
    for (int u = 0; u < g.num_nodes; ++u) {
      CHECK(std::abs(r(u, u)) < 1e-9);
      for (int v = 0; v < g.num_nodes; ++v) {
        CHECK(r(u, v) == doctest::Approx(r(v, u)).epsilon(1e-9));
        for (int w = 0; w < g.num_nodes; ++w)
          CHECK(r(u, w) <= r(u, v) + r(v, w) + 1e-9);
      }
    }
  }
}

TEST_CASE("Rayleigh monotonicity: adding edges never raises resistance") {
  Rng rng(29);
  for (int trial = 0; trial < 4; ++trial) {
    Graph g = erdos_renyi(16, 0.25, rng.next());
    if (!is_connected(g)) continue;
    const Matrix before = all_pairs_resistance(g);
    // Add a few random absent edges.
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < g.num_nodes; ++u)
      for (int v : g.neighbors_of(u))
        if (u < v) edges.emplace_back(u, v);
    int added = 0;
    while (added < 3) {
      const int u = static_cast<int>(rng.uniform_int(g.num_nodes));
      const int v = static_cast<int>(rng.uniform_int(g.num_nodes));
      if (u == v || g.has_edge(u, v)) continue;
      edges.emplace_back(std::min(u, v), std::max(u, v));
      added++;
      const Graph h = from_edge_list(g.num_nodes, edges);
      const Matrix after = all_pairs_resistance(h);
      for (int a = 0; a < g.num_nodes; ++a)
        for (int b = 0; b < g.num_nodes; ++b) CHECK(after(a, b) <= before(a, b) + 1e-9);
    }
  }
}

TEST_CASE("conjugate-gradient path matches the dense pseudoinverse") {
  Rng rng(37);
  const Graph g = erdos_renyi(60, 0.12, rng.next());
  if (!is_connected(g)) return;
  for (int trial = 0; trial < 5; ++trial) {
    const int u = static_cast<int>(rng.uniform_int(g.num_nodes));
    int v = static_cast<int>(rng.uniform_int(g.num_nodes - 1));
    if (v >= u) v++;
    const double dense = effective_resistance(g, u, v);
    const double cg = effective_resistance(g, u, v, /*dense_cap=*/10);
    CHECK(cg == doctest::Approx(dense).epsilon(1e-7));
  }
}

TEST_CASE("augmented laplacian: C=1 on P2 forms a triangle") {
  const Graph p2 = from_edge_list(2, {{0, 1}});
  Partition p;
  p.C = 1;
  p.base_assignment = {0, 0};
  p.blocks = {{0, 1}};
  const Matrix lf = augmented_laplacian(p2, p);
  REQUIRE(lf.rows == 3);
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += lf(i, j);
    CHECK(s == doctest::Approx(0.0));
  }
  const Matrix pf = pseudoinverse(lf);
  const double rf = pf(0, 0) + pf(1, 1) - 2.0 * pf(0, 1);
  CHECK(rf == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("pendant fractal nodes leave other pairs unchanged") {
  // C = n singleton blocks: every fractal node hangs off one original node.
  const Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  Partition p;
  p.C = 3;
  p.base_assignment = {0, 1, 2};
  p.blocks = {{0}, {1}, {2}};
  const Matrix lf = augmented_laplacian(k3, p);
  REQUIRE(lf.rows == 6);
  const Matrix pf = pseudoinverse(lf);
  const double rf = pf(1, 1) + pf(2, 2) - 2.0 * pf(1, 2);
  CHECK(rf == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("augmented laplacian row sums vanish on random instances") {
  Rng rng(43);
  const Graph g = erdos_renyi(25, 0.2, rng.next());
  const Partition p = partition_random(g, 4, rng.next());
  const Matrix lf = augmented_laplacian(g, p);
  for (int i = 0; i < lf.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < lf.cols; ++j) s += lf(i, j);
    CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("resistance report totals on P2 and K3") {
  const Graph p2 = from_edge_list(2, {{0, 1}});
  Partition p;
  p.C = 1;
  p.base_assignment = {0, 0};
  p.blocks = {{0, 1}};
  const ResistanceReport rep = resistance_report(p2, p, 0, 1);
  CHECK(rep.total_R == doctest::Approx(1.0));

  const Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  Partition q;
  q.C = 1;
  q.base_assignment = {0, 0, 0};
  q.blocks = {{0, 1, 2}};
  const ResistanceReport rk = resistance_report(k3, q, 0, 2);
  CHECK(rk.total_R == doctest::Approx(2.0));
  // total over original pairs in the augmented graph equals the pair sum
  double pair_sum = 0.0;
  const ResistanceReport all = resistance_report(k3, q, 0, 2);
  for (const auto& pr : all.pairs) pair_sum += pr.R_f;
  CHECK(all.total_R_f == doctest::Approx(pair_sum).epsilon(1e-9));
}

TEST_CASE("dc_check: constants, tiny case, random matrices") {
  Matrix constant(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) constant(i, j) = 2.5;
  const auto c = dc_check(constant);
  CHECK(c.max_abs_diff < 1e-12);
  CHECK(c.mean_pool[0] == doctest::Approx(2.5));

  Matrix m(3, 1);
  m(0, 0) = 1.0;
  m(1, 0) = 3.0;
  m(2, 0) = 5.0;
  const auto r = dc_check(m);
  CHECK(r.mean_pool[0] == doctest::Approx(3.0));
  CHECK(r.dft_dc[0] == doctest::Approx(3.0));

  Rng rng(3);
  Matrix big(64, 16);
  for (double& x : big.data) x = rng.normal();
  CHECK(dc_check(big).max_abs_diff < 1e-9);
}

TEST_CASE("betweenness on canonical graphs") {
  const Graph p3 = from_edge_list(3, {{0, 1}, {1, 2}});
  const auto b = betweenness(p3);
  CHECK(b[0] == doctest::Approx(0.0));
  CHECK(b[1] == doctest::Approx(1.0));
  CHECK(b[2] == doctest::Approx(0.0));

  const Graph star = from_edge_list(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto s = betweenness(star);
  CHECK(s[0] == doctest::Approx(3.0));
  CHECK(s[1] == doctest::Approx(0.0));

  const auto c = betweenness(cycle(5));
  for (int v = 1; v < 5; ++v) CHECK(c[static_cast<std::size_t>(v)] == doctest::Approx(c[0]));
}

TEST_CASE("betweenness matches the exhaustive oracle on small graphs") {
  Rng rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 6 + static_cast<int>(rng.uniform_int(7));
    const Graph g = erdos_renyi(n, 0.35, rng.next());
    const auto fast = betweenness(g);
    const auto slow = oracle::betweenness_exhaustive(g);
    for (int v = 0; v < n; ++v)
      CHECK(fast[static_cast<std::size_t>(v)] == doctest::Approx(slow[static_cast<std::size_t>(v)]).epsilon(1e-9));
  }
}

TEST_CASE("ks similarity bounds and the whole-graph block") {
  const Graph g = erdos_renyi(30, 0.15, 7);
  Partition whole;
  whole.C = 1;
  whole.base_assignment.assign(30, 0);
  whole.blocks = {std::vector<int>(30)};
  for (int v = 0; v < 30; ++v) whole.blocks[0][static_cast<std::size_t>(v)] = v;
  CHECK(ks_similarity(g, whole) == doctest::Approx(1.0));

  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const Partition p = partition_multilevel(g, 4, rng.next());
    const double s = ks_similarity(g, p);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("ks statistic against a direct empirical-CDF computation") {
  // Path graph: full betweenness vs an edgeless-block point mass at zero.
  const Graph g = from_edge_list(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const auto full = betweenness(g);
  const std::vector<double> pointmass = {0.0, 0.0};
  const double d = ks_statistic(full, pointmass);
  // Direct: fraction of full-graph values <= 0 is 2/6; point mass CDF at 0 is 1.
  CHECK(d == doctest::Approx(1.0 - 2.0 / 6.0));
}

TEST_CASE("resistance path-series equivalence on a small non-bipartite graph") {
  const Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  // R(u,v) = sum_i [ (A^i)_uu / d_u + (A^i)_vv / d_v - 2 (A^i)_uv / sqrt(d_u d_v) ]
  // with A the degree-normalized adjacency.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  for (int v = 0; v < 3; ++v)
    for (int u : k3.neighbors_of(v)) a(v, u) = 1.0 / std::sqrt(4.0);
  Eigen::MatrixXd powa = Eigen::MatrixXd::Identity(3, 3);
  double series = 0.0;
  for (int i = 0; i < 500; ++i) {
    series += powa(0, 0) / 2.0 + powa(1, 1) / 2.0 - 2.0 * powa(0, 1) / 2.0;
    powa = powa * a;
  }
  CHECK(series == doctest::Approx(effective_resistance(k3, 0, 1)).epsilon(1e-9));
}

TEST_SUITE_END();
