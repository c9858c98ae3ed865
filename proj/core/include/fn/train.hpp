#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fn/graph.hpp"
#include "fn/metrics.hpp"
#include "fn/model.hpp"

namespace fn {

struct TrainConfig {
  int epochs = 200;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int patience = 50;
  LossKind loss = LossKind::Auto;

  void validate() const;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  double wall_ms = 0.0;  // excluded from deterministic outputs
};

struct ExperimentReport {
  std::string name;
  std::vector<EpochRow> rows;
  std::map<std::string, double> final_metrics;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct TrainResult {
  Model model;
  ExperimentReport report;
};

// Supervised loop: Adam, batched disjoint-union forward passes, best-validation
// checkpoint retained (falls back to best train loss without a val split),
// early stop on patience, deterministic per seed. NaN loss aborts with a
// diagnostic.
TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg, const Dataset& ds);

// Loss plus task metrics over the given graph indices.
std::map<std::string, double> evaluate(const Model& m, const Dataset& ds,
                                       const std::vector<int>& idx, LossKind loss,
                                       std::uint64_t seed);

// Canonical "key=value" dump hashed into the report (FNV-1a hex).
std::string config_canonical(const ModelConfig& mcfg, const TrainConfig& tcfg);
std::string config_hash(const ModelConfig& mcfg, const TrainConfig& tcfg);

// Adam step shared with the benchmarks.
struct AdamState {
  std::vector<ad::Tensor> m1, m2;
  std::int64_t t = 0;
};
void adam_step(Model& model, const std::vector<ad::Tensor>& grads, AdamState& state,
               const TrainConfig& tcfg);

}  // namespace fn
