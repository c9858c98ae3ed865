#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fn/generators.hpp"
#include "fn/graph.hpp"
#include "fn/model.hpp"
#include "fn/train.hpp"

namespace fn {

// Model shorthand "backbone+variant", e.g. "gcn+fn_m"; the remaining knobs
// come from the experiment options.
ModelConfig model_config_from_name(const std::string& name);

// ---- TreeNeighboursMatch across problem radius ----
struct TreeMatchOptions {
  std::vector<int> radii{3, 5};
  int train_samples = 2000;
  int test_samples = 500;
  int seeds = 3;
  int dim_h = 32;
  int C = 8;
  int k_hop = 1;
  int epochs = 120;
  double lr = 2e-3;
  int batch_size = 64;
  int patience = 30;
  std::vector<std::string> models{"gcn+plain", "gcn+fn"};
};
struct TreeMatchCell {
  int radius = 0;
  std::string model;
  std::uint64_t seed = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};
std::vector<TreeMatchCell> tree_match_experiment(const TreeMatchOptions& opt, std::uint64_t seed,
                                                 const std::string& out_dir);

// ---- CSL expressivity (5-fold stratified) ----
struct CslOptions {
  int n = 41;
  std::vector<int> skips = csl_default_skips();
  int copies = 15;
  int folds = 5;
  int seeds = 3;
  int feature_dim = 8;  // i.i.d. normal node features; 0 = constant scalar
  int dim_h = 32;
  int C = 8;
  int k_hop = 1;
  int layers = 3;
  int mixer_layers = 2;
  int epochs = 150;
  double lr = 3e-3;
  double weight_decay = 0.0;
  int batch_size = 16;
  int patience = 40;
  PeKind pe = PeKind::None;
  int pe_dim = 8;
  std::vector<std::string> models{"gcn+plain", "gcn+fn_m"};
};
struct CslCell {
  std::string model;
  std::uint64_t seed = 0;
  int fold = 0;
  double test_acc = 0.0;
};
std::vector<CslCell> csl_experiment(const CslOptions& opt, std::uint64_t seed,
                                    const std::string& out_dir);
double csl_mean_accuracy(const std::vector<CslCell>& cells, const std::string& model);

// ---- Signal propagation of frozen random models on ER graphs ----
struct SignalOptions {
  int graphs = 100;
  int n = 40;
  double p_min = 0.06;
  double p_max = 0.20;
  int layers = 4;
  int dim_h = 16;
  int C = 4;
  int k_hop = 1;
  int init_seeds = 5;
  int sources = 10;
};
struct SignalRow {
  int graph_id = 0;
  double r_tot_norm = 0.0;
  double h_plain = 0.0;
  double h_fn = 0.0;
};
std::vector<SignalRow> signal_experiment(const SignalOptions& opt, std::uint64_t seed,
                                         const std::string& out_dir);

// ---- KS structural-similarity trend over C ----
struct KsTrendOptions {
  int graphs = 50;
  int n_min = 130;
  int n_max = 170;
  double avg_degree = 3.5;
  std::vector<int> C_values{2, 4, 8, 16, 32};
  int k_hop = 1;
};
struct KsTrendRow {
  int graph_id = 0;
  int C = 0;
  double ks = 0.0;
};
std::vector<KsTrendRow> ks_trend_experiment(const KsTrendOptions& opt, std::uint64_t seed,
                                            const std::string& out_dir);
// Spearman correlation between C and the mean ks score per C.
double ks_trend_spearman(const std::vector<KsTrendRow>& rows);

// ---- Resistance verification on ER graphs ----
struct ResistanceOptions {
  int graphs = 50;
  int n_min = 20;
  int n_max = 40;
  double p = 0.15;
  std::vector<int> C_values{1, 2, 4};
  int k_hop = 1;
  int sample_pairs = 40;
};
struct ResistanceRowOut {
  int graph_id = 0;
  int C = 0;
  int u = 0, v = 0;
  double R = 0.0, R_f = 0.0;
};
struct ResistanceTotals {
  int graph_id = 0;
  int C = 0;
  double total_R = 0.0, total_R_f = 0.0;
};
struct ResistanceResult {
  std::vector<ResistanceRowOut> pairs;
  std::vector<ResistanceTotals> totals;
};
ResistanceResult resistance_experiment(const ResistanceOptions& opt, std::uint64_t seed,
                                       const std::string& out_dir);

// ---- Wall-clock / memory scaling of a training step ----
struct ScalingOptions {
  std::vector<int> sizes{1000, 10000, 50000};
  double avg_degree = 5.0;
  int dim_h = 128;
  int layers = 3;
  int C = 32;
  int steps = 3;
  int feature_dim = 16;
};
struct ScalingRow {
  int n = 0;
  double seconds_per_step = 0.0;
  double peak_bytes = 0.0;
};
std::vector<ScalingRow> scaling_experiment(const ScalingOptions& opt, std::uint64_t seed,
                                           const std::string& out_dir);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Runs units [0, count) on the FN_THREADS pool (default: hardware threads,
// capped at 4). Each unit must be self-contained and deterministic.
void parallel_for_units(int count, const std::function<void(int)>& unit);

}  // namespace fn
