// Acceptance suite: runs the eleven project criteria end to end and prints
// one pass/fail line each. Usage: acceptance [criterion-number | all]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fn/experiments.hpp"
#include "fn/generators.hpp"
#include "fn/grad_check.hpp"
#include "fn/model.hpp"
#include "fn/rng.hpp"
#include "fn/spectral.hpp"
#include "fn/train.hpp"

using namespace fn;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

Graph random_featured_graph(int n, double p, int d, Rng& rng) {
  Graph g = erdos_renyi(n, p, rng.next());
  g.node_features = Matrix(n, d);
  for (double& x : g.node_features.data) x = rng.normal();
  return g;
}

// ---- 1. mean pooling equals the DFT DC reconstruction ----
Outcome criterion_dc() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 2 + static_cast<int>(rng.uniform_int(63));
    const int cols = 1 + static_cast<int>(rng.uniform_int(16));
    Matrix m(rows, cols);
    for (double& x : m.data) x = rng.normal() * std::exp(rng.uniform(-2.0, 2.0));
    worst = std::max(worst, dc_check(m).max_abs_diff);
  }
  return {worst < 1e-9, "max_abs_diff=" + fmt(worst) + " over 100 matrices (tol 1e-9)"};
}

// ---- 2. R_f <= R on every sampled pair ----
Outcome criterion_resistance_reduction(const ResistanceResult& res) {
  std::int64_t checked = 0, violations = 0;
  double worst_gap = -1e300;
  for (const auto& pr : res.pairs) {
    checked++;
    const double gap = pr.R_f - pr.R;
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-9) violations++;
  }
  return {violations == 0 && checked > 0,
          std::to_string(checked) + " pairs, violations=" + std::to_string(violations) +
              ", worst R_f-R=" + fmt(worst_gap) + " (tol 1e-9)"};
}

// ---- 3. total resistance generally decreases with more fractal nodes ----
Outcome criterion_total_resistance_trend(const ResistanceResult& res) {
  std::map<int, std::map<int, double>> totals;  // graph -> C -> total_R_f
  for (const auto& t : res.totals) totals[t.graph_id][t.C] = t.total_R_f;
  int graphs = 0, holds = 0;
  std::string failures;
  for (const auto& [gid, by_c] : totals) {
    if (!by_c.count(1) || !by_c.count(4)) continue;
    graphs++;
    if (by_c.at(4) <= by_c.at(1) + 1e-9) {
      holds++;
    } else {
      failures += " g" + std::to_string(gid) + "(C4=" + fmt(by_c.at(4)) + ">C1=" + fmt(by_c.at(1)) + ")";
    }
  }
  const double frac = graphs > 0 ? static_cast<double>(holds) / graphs : 0.0;
  std::string details = "R_tot_f(C=4) <= R_tot_f(C=1) on " + std::to_string(holds) + "/" +
                        std::to_string(graphs) + " graphs (need >= 90%)";
  if (!failures.empty()) details += "; failing:" + failures;
  return {frac >= 0.9, details};
}

// ---- 4. gradient correctness across layers, fractal modes, mixer, models ----
Outcome criterion_gradients() {
  Rng rng(404);
  double worst = 0.0;
  std::string worst_tag = "none";
  auto record = [&](const std::string& tag, const ad::GradCheckReport& rep) {
    if (rep.max_rel_error > worst) {
      worst = rep.max_rel_error;
      worst_tag = tag;
    }
  };

  auto model_check = [&](ModelConfig cfg, const std::string& tag) {
    cfg.layers = 2;
    cfg.dim_h = 4;
    cfg.k_hop = 1;
    cfg.mixer_layers = 1;
    cfg.out_dim = 3;
    Graph g = random_featured_graph(10 + static_cast<int>(rng.uniform_int(6)), 0.3, 3, rng);
    g.graph_label = 1;
    Model model = Model::init(cfg, 3, 0, rng.next());
    // Evaluate at a generic point: zero-initialized biases can park a ReLU
    // input exactly on its kink, where the subgradient is one-sided.
    for (auto& param : model.params)
      for (double& x : param.v) x += 0.2 * rng.normal();
    GraphContext ctx = prepare_graph(g, cfg, rng.next());
    ctx.g = &g;
    const Batch batch = make_batch({&ctx}, cfg, false, nullptr);
    const auto rep = ad::grad_check(
        [&](Tape& t, const std::vector<Var>& vars) {
          Model probe = model;
          for (std::size_t i = 0; i < probe.params.size(); ++i) probe.params[i] = t.val(vars[i]);
          BoundModel bm;
          bm.model = &probe;
          bm.tape = &t;
          bm.vars = vars;
          for (std::size_t i = 0; i < probe.names.size(); ++i)
            bm.index.emplace(probe.names[i], static_cast<int>(i));
          return ad::cross_entropy(t, forward(bm, batch).predictions, {1});
        },
        model.params, 1e-5, 1e-4);
    record(tag, rep);
  };

  // Fractal update in every omega mode, with and without the high-pass term.
  for (OmegaMode om : {OmegaMode::Scalar, OmegaMode::Vector, OmegaMode::Off}) {
    for (bool hpf : {true, false}) {
      ModelConfig cfg;
      cfg.variant = Variant::FN;
      cfg.C = 3;
      cfg.omega_mode = om;
      cfg.use_hpf = hpf;
      model_check(cfg, std::string("fn-omega") + (om == OmegaMode::Scalar ? "S" : om == OmegaMode::Vector ? "V" : "0") +
                           (hpf ? "-hpf" : "-nohpf"));
    }
  }
  // Every backbone and variant end to end (mixer included via FN_M).
  for (Backbone b : {Backbone::GCN, Backbone::GINE, Backbone::GatedGCN}) {
    for (Variant v : {Variant::Plain, Variant::FN, Variant::FN_M, Variant::FN_A}) {
      ModelConfig cfg;
      cfg.backbone = b;
      cfg.variant = v;
      cfg.C = 3;
      cfg.omega_mode = OmegaMode::Vector;
      model_check(cfg, backbone_name(b) + "+" + variant_name(v));
    }
  }
  // Mean+std fractal summary path.
  {
    ModelConfig cfg;
    cfg.variant = Variant::FN_M;
    cfg.C = 3;
    cfg.mixer_summary = MixerSummary::MeanStd;
    model_check(cfg, "fn_m+meanstd");
  }
  return {worst < 1e-4, "max_rel_error=" + fmt(worst) + " at " + worst_tag + " (tol 1e-4)"};
}

// ---- 5. HPF block sums vanish; omega = 0 is bitwise mean pooling ----
Outcome criterion_hpf_invariants() {
  Rng rng(505);
  double worst_sum = 0.0;
  std::int64_t bit_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(24));
    const int d = 1 + static_cast<int>(rng.uniform_int(6));
    const int c = 1 + static_cast<int>(rng.uniform_int(std::min(n, 5)));
    const Graph g = erdos_renyi(n, 0.3, rng.next());
    const Partition base = partition_random(g, c, rng.next());
    const Partition part = expand_k_hop(g, base, static_cast<int>(rng.uniform_int(2)));

    Tensor h = Tensor::randn({n, d}, rng);
    Tape t;
    Var hv = t.leaf(h, false);
    Var lpf = ad::segment_mean_blocks(t, hv, part.blocks);
    // Deviation sums over each block, exactly zero to rounding.
    for (int b = 0; b < part.C; ++b) {
      const auto& blk = part.blocks[static_cast<std::size_t>(b)];
      for (int j = 0; j < d; ++j) {
        double dev = 0.0, scale = 0.0;
        for (int v : blk) {
          dev += h.at(v, j) - t.val(lpf).at(b, j);
          scale += std::abs(h.at(v, j));
        }
        worst_sum = std::max(worst_sum, std::abs(dev) / std::max(1.0, scale));
      }
    }
    // omega = 0 fractal message vs the explicit mean-pool path, bitwise.
    Var fused = ad::fractal_message(t, hv, lpf, lpf, part.base_assignment, Var{-1});
    Var composed = ad::add(t, hv, ad::segment_broadcast(t, lpf, part.base_assignment));
    for (std::size_t i = 0; i < t.val(fused).v.size(); ++i)
      bit_mismatches += t.val(fused).v[i] != t.val(composed).v[i];
  }
  return {worst_sum < 1e-12 && bit_mismatches == 0,
          "worst scaled HPF block sum=" + fmt(worst_sum) + ", omega=0 bit mismatches=" +
              std::to_string(bit_mismatches) + " over 1000 instances"};
}

// ---- 6. TreeNeighboursMatch dominance trend ----
Outcome criterion_tree_match() {
  TreeMatchOptions opt;
  opt.radii = {3, 5};
  opt.train_samples = 3000;
  opt.test_samples = 600;
  opt.seeds = 3;
  opt.dim_h = 32;
  opt.C = 8;
  opt.k_hop = 1;
  opt.epochs = 60;
  opt.lr = 2e-3;
  opt.batch_size = 64;
  opt.patience = 60;
  const auto cells = tree_match_experiment(opt, 606, "");
  auto mean_acc = [&](int radius, const std::string& model) {
    double acc = 0.0;
    int cnt = 0;
    for (const auto& c : cells)
      if (c.radius == radius && c.model == model) {
        acc += c.test_acc;
        cnt++;
      }
    return cnt > 0 ? acc / cnt : 0.0;
  };
  const double fn_r3 = mean_acc(3, "gcn+fn");
  const double fn_r5 = mean_acc(5, "gcn+fn");
  const double plain_r5 = mean_acc(5, "gcn+plain");
  const bool pass = fn_r3 >= 0.95 && (fn_r5 - plain_r5) >= 0.10;
  return {pass, "gcn+fn r3=" + fmt(fn_r3) + " (need >=0.95); r5 fn=" + fmt(fn_r5) + " vs plain=" +
                    fmt(plain_r5) + " (need +10pp over 3 seeds)"};
}

// ---- 7. CSL expressivity trend ----
Outcome criterion_csl() {
  CslOptions opt;
  const auto cells = csl_experiment(opt, 707, "");
  const double plain = csl_mean_accuracy(cells, "gcn+plain");
  const double fnm = csl_mean_accuracy(cells, "gcn+fn_m");
  const bool pass = plain >= 0.07 && plain <= 0.13 && fnm >= 0.25;
  return {pass, "gcn+plain=" + fmt(plain) + " (need 0.10 +/- 0.03); gcn+fn_m=" + fmt(fnm) +
                    " (need >= 0.25); 5-fold x 3 seeds"};
}

// ---- 8. signal propagation in the top-resistance tercile ----
Outcome criterion_signal() {
  SignalOptions opt;
  const auto rows = signal_experiment(opt, 808, "");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rows[a].r_tot_norm < rows[b].r_tot_norm; });
  const std::size_t start = order.size() * 2 / 3;
  double plain = 0.0, fn = 0.0;
  for (std::size_t i = start; i < order.size(); ++i) {
    plain += rows[order[i]].h_plain;
    fn += rows[order[i]].h_fn;
  }
  const auto cnt = static_cast<double>(order.size() - start);
  plain /= cnt;
  fn /= cnt;
  return {fn > plain, "top-resistance tercile (" + std::to_string(order.size() - start) +
                          " graphs): mean h for gcn+fn_m=" + fmt(fn) + " vs gcn=" + fmt(plain) +
                          ", averaged over 5 init seeds"};
}

// ---- 9. ks similarity trend over C ----
Outcome criterion_ks_trend() {
  KsTrendOptions opt;
  const auto rows = ks_trend_experiment(opt, 909, "");
  const double rho = ks_trend_spearman(rows);
  return {rho > 0.0, "spearman(C, mean ks)=" + fmt(rho) + " over C={2,4,8,16,32}, 50 graphs (need > 0)"};
}

// ---- 10. near-linear scaling of a training step ----
Outcome criterion_scaling() {
  ScalingOptions opt;
  const auto rows = scaling_experiment(opt, 1010, "");
  std::vector<double> ns, secs, bytes;
  for (const auto& r : rows) {
    ns.push_back(r.n);
    secs.push_back(r.seconds_per_step);
    bytes.push_back(r.peak_bytes);
  }
  const double t_slope = loglog_slope(ns, secs);
  const double m_slope = loglog_slope(ns, bytes);
  const bool pass = t_slope < 1.2 && m_slope < 1.15 && m_slope > 0.85;
  std::string details = "time slope=" + fmt(t_slope) + " (need < 1.2), memory slope=" + fmt(m_slope) +
                        " (need ~1);";
  for (const auto& r : rows)
    details += " n=" + std::to_string(r.n) + ":" + fmt(r.seconds_per_step) + "s/" +
               fmt(r.peak_bytes / 1048576.0) + "MiB";
  return {pass, details};
}

// ---- 11. plain variant is bit-identical to a backbone-only path ----
Outcome criterion_plain_equivalence() {
  Rng rng(1111);
  std::int64_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig cfg;
    cfg.backbone = trial % 3 == 0 ? Backbone::GCN : (trial % 3 == 1 ? Backbone::GINE : Backbone::GatedGCN);
    cfg.variant = Variant::Plain;
    cfg.layers = 1 + static_cast<int>(rng.uniform_int(3));
    cfg.dim_h = 4 + static_cast<int>(rng.uniform_int(5));
    cfg.C = 2;
    cfg.out_dim = 2 + static_cast<int>(rng.uniform_int(3));
    cfg.head = trial % 2 == 0 ? HeadKind::GraphClassification : HeadKind::NodeClassification;
    const int n = 6 + static_cast<int>(rng.uniform_int(20));
    Graph g = random_featured_graph(n, 0.25, 3, rng);
    const Model model = Model::init(cfg, 3, 0, rng.next());
    GraphContext ctx = prepare_graph(g, cfg, rng.next());
    ctx.g = &g;
    const Batch batch = make_batch({&ctx}, cfg, false, nullptr);
    Tape t1, t2;
    BoundModel b1 = bind(model, t1, false);
    BoundModel b2 = bind(model, t2, false);
    const Tensor& a = t1.val(forward(b1, batch).predictions);
    const Tensor& b = t2.val(backbone_only_forward(b2, batch).predictions);
    if (a.v.size() != b.v.size()) {
      mismatches++;
      continue;
    }
    for (std::size_t i = 0; i < a.v.size(); ++i) mismatches += a.v[i] != b.v[i];
  }
  return {mismatches == 0,
          "bitwise mismatches=" + std::to_string(mismatches) + " over 100 random graphs"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  // Criteria 2 and 3 share one experiment over the same graph set.
  ResistanceResult shared_resistance;
  bool resistance_ready = false;
  auto ensure_resistance = [&]() {
    if (!resistance_ready) {
      ResistanceOptions opt;
      shared_resistance = resistance_experiment(opt, 202, "");
      resistance_ready = true;
    }
  };

  const std::vector<Criterion> criteria = {
      {1, "mean pooling equals the DFT DC component", criterion_dc},
      {2, "fractal nodes never increase effective resistance",
       [&]() {
         ensure_resistance();
         return criterion_resistance_reduction(shared_resistance);
       }},
      {3, "total resistance generally decreases with more fractal nodes",
       [&]() {
         ensure_resistance();
         return criterion_total_resistance_trend(shared_resistance);
       }},
      {4, "finite-difference gradient checks across layers, fractal modes, mixer, models",
       criterion_gradients},
      {5, "high-pass block sums vanish; omega=0 equals mean pooling bitwise", criterion_hpf_invariants},
      {6, "TreeNeighboursMatch: fractal nodes dominate plain GCN at depth", criterion_tree_match},
      {7, "CSL: plain GCN at chance, fractal mixer above it", criterion_csl},
      {8, "signal propagation advantage under high total resistance", criterion_signal},
      {9, "structural similarity increases with subgraph count", criterion_ks_trend},
      {10, "training step scales near-linearly in graph size", criterion_scaling},
      {11, "plain variant bit-identical to backbone-only forward", criterion_plain_equivalence},
  };

  int selected = 0;  // 0 = all
  if (argc > 1 && std::string(argv[1]) != "all") selected = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    const double t0 = now_seconds();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double dt = now_seconds() - t0;
    std::printf("[%s] %2d. %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.details.c_str(), dt);
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures;
}
