#include <doctest.h>

#include <cmath>

#include "fn/generators.hpp"
#include "fn/metrics.hpp"
#include "fn/rng.hpp"
#include "fn/signal.hpp"
#include "fn/train.hpp"

using namespace fn;

namespace {

Dataset tiny_classification(int graphs, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.task = Task::Classification;
  ds.num_classes = 2;
  for (int i = 0; i < graphs; ++i) {
    Graph g = erdos_renyi(10, i % 2 == 0 ? 0.15 : 0.5, rng.next());
    g.node_features = Matrix(10, 4);
    for (double& x : g.node_features.data) x = rng.normal();
    g.graph_label = i % 2;
    ds.graphs.push_back(std::move(g));
    ds.train_idx.push_back(i);
  }
  return ds;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("lr = 0 leaves parameters unchanged") {
  Dataset ds = tiny_classification(6, 3);
  ModelConfig mcfg;
  mcfg.layers = 2;
  mcfg.dim_h = 8;
  mcfg.C = 2;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.lr = 0.0;
  tcfg.seed = 5;
  const Model fresh = Model::init(
      [&] {
        ModelConfig c = mcfg;
        c.head = head_for_task(ds.task);
        c.out_dim = 2;
        return c;
      }(),
      4, 0, Rng(5).stream("init").next());
  const TrainResult res = train(mcfg, tcfg, ds);
  REQUIRE(res.model.params.size() == fresh.params.size());
  for (std::size_t i = 0; i < fresh.params.size(); ++i)
    for (std::size_t k = 0; k < fresh.params[i].v.size(); ++k)
      CHECK(res.model.params[i].v[k] == fresh.params[i].v[k]);
}

TEST_CASE("overfits a single graph to near-zero loss") {
  Dataset ds = tiny_classification(1, 7);
  ModelConfig mcfg;
  mcfg.layers = 2;
  mcfg.dim_h = 16;
  mcfg.C = 2;
  TrainConfig tcfg;
  tcfg.epochs = 500;
  tcfg.lr = 5e-3;
  tcfg.patience = 500;
  tcfg.seed = 11;
  const TrainResult res = train(mcfg, tcfg, ds);
  CHECK(res.report.final_metrics.at("train_loss") < 1e-3);
}

TEST_CASE("same seed twice gives a bit-identical metric series") {
  Dataset ds = tiny_classification(8, 13);
  ds.val_idx = {6, 7};
  ds.train_idx = {0, 1, 2, 3, 4, 5};
  ModelConfig mcfg;
  mcfg.layers = 2;
  mcfg.dim_h = 8;
  mcfg.C = 2;
  TrainConfig tcfg;
  tcfg.epochs = 8;
  tcfg.seed = 17;
  const TrainResult a = train(mcfg, tcfg, ds);
  const TrainResult b = train(mcfg, tcfg, ds);
  REQUIRE(a.report.rows.size() == b.report.rows.size());
  for (std::size_t i = 0; i < a.report.rows.size(); ++i) {
    CHECK(a.report.rows[i].train_loss == b.report.rows[i].train_loss);
    CHECK(a.report.rows[i].val_loss == b.report.rows[i].val_loss);
    CHECK(a.report.rows[i].val_metric == b.report.rows[i].val_metric);
  }
  CHECK(a.report.config_hash == b.report.config_hash);
}

TEST_CASE("metric rows are monotone in epoch index") {
  Dataset ds = tiny_classification(4, 19);
  ModelConfig mcfg;
  mcfg.layers = 1;
  mcfg.dim_h = 4;
  mcfg.C = 2;
  TrainConfig tcfg;
  tcfg.epochs = 5;
  tcfg.seed = 23;
  const TrainResult res = train(mcfg, tcfg, ds);
  for (std::size_t i = 1; i < res.report.rows.size(); ++i)
    CHECK(res.report.rows[i].epoch == res.report.rows[i - 1].epoch + 1);
}

TEST_CASE("metrics: perfect predictions, reversal antisymmetry, tie handling") {
  ad::Tensor logits({3, 2}, {5.0, -1.0, -2.0, 4.0, 3.0, 0.0});
  CHECK(accuracy(logits, {0, 1, 0}) == doctest::Approx(1.0));
  CHECK(accuracy(logits, {1, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(logits, {-1, 1, 0}) == doctest::Approx(1.0));

  Matrix targets(4, 1);
  targets(1, 0) = 1.0;
  targets(3, 0) = 1.0;
  ad::Tensor perfect({4, 1}, {-2.0, 3.0, -1.0, 2.0});
  CHECK(multilabel_ap(perfect, targets) == doctest::Approx(1.0));
  CHECK(multilabel_roc_auc(perfect, targets) == doctest::Approx(1.0));

  // Constant scores collapse to one tie group: AP equals prevalence.
  ad::Tensor constant({4, 1}, {0.7, 0.7, 0.7, 0.7});
  CHECK(multilabel_ap(constant, targets) == doctest::Approx(0.5));

  // Reversed scores mirror the AUC.
  const std::vector<double> scores = {0.1, 0.9, 0.4, 0.55};
  const std::vector<int> labels = {0, 1, 0, 1};
  std::vector<double> reversed;
  for (double s : scores) reversed.push_back(-s);
  CHECK(roc_auc(scores, labels) == doctest::Approx(1.0 - roc_auc(reversed, labels)));

  ad::Tensor pred({2, 2}, {1.0, 2.0, 3.0, 4.0});
  Matrix tgt(2, 2);
  tgt(0, 0) = 1.0;
  tgt(0, 1) = 2.0;
  tgt(1, 0) = 3.0;
  tgt(1, 1) = 4.0;
  CHECK(mean_absolute_error(pred, tgt) == doctest::Approx(0.0));
}

TEST_CASE("average precision against the closed form on a tiny case") {
  // scores descending: labels 1,0,1 -> AP = (1/1 + 2/3) / 2.
  CHECK(average_precision({0.9, 0.5, 0.2}, {1, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("nan loss aborts with a diagnostic") {
  Dataset ds = tiny_classification(2, 29);
  ModelConfig mcfg;
  mcfg.layers = 2;
  mcfg.dim_h = 4;
  mcfg.C = 2;
  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.lr = 1e60;  // diverges immediately
  tcfg.seed = 31;
  CHECK_THROWS_AS(train(mcfg, tcfg, ds), std::runtime_error);
}

TEST_CASE("signal propagation: zero layers worth of signal is zero at the source only") {
  // All-zero features except the source: with identity-free layers the
  // measurement is finite and permutation-invariant.
  Rng rng(31);
  std::vector<Graph> graphs;
  Graph g = erdos_renyi(16, 0.25, 5);
  while (!is_connected(g)) g = erdos_renyi(16, 0.25, rng.next());
  graphs.push_back(g);

  ModelConfig cfg;
  cfg.variant = Variant::FN_M;
  cfg.layers = 3;
  cfg.dim_h = 8;
  cfg.C = 2;
  cfg.out_dim = 1;
  const Model m = Model::init(cfg, 8, 0, 3);
  const auto pts = signal_propagation(m, graphs, 4, 7);
  REQUIRE(pts.size() == 1);
  CHECK(std::isfinite(pts[0].h_sun));
  CHECK(pts[0].r_tot_norm > 0.0);
  CHECK(pts[0].r_tot_f_norm > 0.0);
  CHECK(pts[0].r_tot_f_norm <= pts[0].r_tot_norm + 1e-9);

  // Permutation invariance of the per-graph measurement.
  const std::vector<int> perm = Rng(11).permutation(16);
  std::vector<Graph> permuted = {permute_graph(g, perm)};
  const auto pts2 = signal_propagation(m, permuted, 4, 7);
  CHECK(pts2[0].r_tot_norm == doctest::Approx(pts[0].r_tot_norm).epsilon(1e-9));
}

TEST_SUITE_END();
