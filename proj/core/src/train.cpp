#include "fn/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (lr < 0.0) throw std::invalid_argument("train: negative learning rate");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("train: betas must lie in [0,1)");
  if (eps <= 0.0) throw std::invalid_argument("train: eps must be positive");
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
}

std::string config_canonical(const ModelConfig& m, const TrainConfig& t) {
  std::ostringstream os;
  os << "model.backbone=" << backbone_name(m.backbone) << '\n'
     << "model.variant=" << variant_name(m.variant) << '\n'
     << "model.layers=" << m.layers << '\n'
     << "model.dim_h=" << m.dim_h << '\n'
     << "model.C=" << m.C << '\n'
     << "model.k_hop=" << m.k_hop << '\n'
     << "model.omega=" << (m.omega_mode == OmegaMode::Scalar ? "scalar" : m.omega_mode == OmegaMode::Vector ? "vector" : "off") << '\n'
     << "model.use_hpf=" << (m.use_hpf ? 1 : 0) << '\n'
     << "model.mixer_layers=" << m.mixer_layers << '\n'
     << "model.mixer_summary=" << (m.mixer_summary == MixerSummary::Mean ? "mean" : "mean_std") << '\n'
     << "model.pe=" << (m.pe == PeKind::None ? "none" : m.pe == PeKind::Lap ? "lap" : "rwse") << ':' << m.pe_dim << '\n'
     << "model.fractal_pe=" << (m.fractal_pe ? 1 : 0) << '\n'
     << "model.out_dim=" << m.out_dim << '\n'
     << "model.partitioner=" << static_cast<int>(m.partitioner) << '\n'
     << "model.balance_eps=" << m.balance_eps << '\n'
     << "train.epochs=" << t.epochs << '\n'
     << "train.lr=" << t.lr << '\n'
     << "train.beta1=" << t.beta1 << '\n'
     << "train.beta2=" << t.beta2 << '\n'
     << "train.eps=" << t.eps << '\n'
     << "train.weight_decay=" << t.weight_decay << '\n'
     << "train.batch_size=" << t.batch_size << '\n'
     << "train.patience=" << t.patience << '\n'
     << "train.seed=" << t.seed << '\n';
  return os.str();
}

std::string config_hash(const ModelConfig& m, const TrainConfig& t) {
  const std::string s = config_canonical(m, t);
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& tcfg) {
  if (state.m1.empty()) {
    for (const auto& p : model.params) {
      state.m1.push_back(Tensor(p.shape));
      state.m2.push_back(Tensor(p.shape));
    }
  }
  state.t++;
  const double bc1 = 1.0 - std::pow(tcfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(tcfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    auto& p = model.params[i];
    auto& m1 = state.m1[i];
    auto& m2 = state.m2[i];
    for (std::size_t k = 0; k < p.v.size(); ++k) {
      const double g = grads[i].v[k] + tcfg.weight_decay * p.v[k];
      m1.v[k] = tcfg.beta1 * m1.v[k] + (1.0 - tcfg.beta1) * g;
      m2.v[k] = tcfg.beta2 * m2.v[k] + (1.0 - tcfg.beta2) * g * g;
      p.v[k] -= tcfg.lr * (m1.v[k] / bc1) / (std::sqrt(m2.v[k] / bc2) + tcfg.eps);
    }
  }
}

namespace {

struct EvalOut {
  double loss = 0.0;
  std::map<std::string, double> metrics;
};

// Concatenates batched predictions so ranking metrics see the full split.
EvalOut eval_split(const Model& model, const std::vector<GraphContext>& ctxs,
                   const std::vector<int>& idx, const Dataset& ds, LossKind loss, int batch_size) {
  EvalOut out;
  if (idx.empty()) return out;
  Tensor all_preds;
  std::vector<int> all_labels;
  Matrix all_targets;
  double loss_sum = 0.0;
  std::int64_t loss_units = 0;
  std::size_t pos = 0;
  while (pos < idx.size()) {
    std::vector<const GraphContext*> chunk;
    for (; pos < idx.size() && static_cast<int>(chunk.size()) < batch_size; ++pos)
      chunk.push_back(&ctxs[static_cast<std::size_t>(idx[pos])]);
    Tape tape;
    BoundModel bm = bind(model, tape, false);
    Batch batch = make_batch(chunk, model.cfg, false, nullptr);
    ForwardOut fo = forward(bm, batch);
    Var l = loss_op(tape, fo.predictions, batch, loss);
    const Tensor& preds = tape.val(fo.predictions);
    const std::int64_t units = ds.task == Task::NodeClassification
                                   ? static_cast<std::int64_t>(chunk.size())
                                   : preds.rows();
    loss_sum += tape.val(l).v[0] * static_cast<double>(units);
    loss_units += units;

    const int old_rows = all_preds.rows() * (all_preds.numel() > 0 ? 1 : 0);
    Tensor merged({(old_rows ? all_preds.rows() : 0) + preds.rows(), preds.cols()});
    if (old_rows)
      std::copy(all_preds.v.begin(), all_preds.v.end(), merged.v.begin());
    std::copy(preds.v.begin(), preds.v.end(), merged.v.begin() + (old_rows ? all_preds.v.size() : 0));
    all_preds = std::move(merged);

    if (ds.task == Task::NodeClassification) {
      all_labels.insert(all_labels.end(), batch.node_labels.begin(), batch.node_labels.end());
    } else if (ds.task == Task::Classification) {
      all_labels.insert(all_labels.end(), batch.labels.begin(), batch.labels.end());
    } else {
      Matrix merged_t(all_targets.rows + batch.targets.rows, batch.targets.cols);
      std::copy(all_targets.data.begin(), all_targets.data.end(), merged_t.data.begin());
      std::copy(batch.targets.data.begin(), batch.targets.data.end(),
                merged_t.data.begin() + all_targets.data.size());
      all_targets = std::move(merged_t);
    }
  }
  out.loss = loss_sum / static_cast<double>(std::max<std::int64_t>(1, loss_units));
  out.metrics = compute_metrics(ds.task, all_preds, all_labels, all_targets);
  out.metrics["loss"] = out.loss;
  return out;
}

}  // namespace

TrainResult train(const ModelConfig& mcfg_in, const TrainConfig& tcfg, const Dataset& ds) {
  tcfg.validate();
  ds.validate();
  ModelConfig mcfg = mcfg_in;
  mcfg.head = head_for_task(ds.task);
  mcfg.out_dim = (ds.task == Task::Classification || ds.task == Task::NodeClassification)
                     ? ds.num_classes
                     : ds.target_dim;
  if (mcfg.out_dim < 1) throw std::invalid_argument("train: dataset declares no output width");
  if (ds.train_idx.empty()) throw std::invalid_argument("train: empty train split");
  const int d_in = ds.graphs.at(0).node_features.cols;
  const int d_edge = ds.graphs.at(0).edge_features.cols;
  const LossKind loss = resolve_loss(tcfg.loss, ds.task);

  Rng root(tcfg.seed);
  Model model = Model::init(mcfg, d_in, d_edge, root.stream("init").next());

  // Partitions and PEs are pure per-graph preprocessing.
  Rng part_rng = root.stream("partition");
  std::vector<GraphContext> ctxs;
  ctxs.reserve(ds.graphs.size());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i)
    ctxs.push_back(prepare_graph(ds.graphs[i], mcfg, part_rng.stream(i).next()));

  Rng order_rng = root.stream("order");
  Rng flip_rng = root.stream("pe_signs");

  AdamState adam;
  const bool higher_better = metric_higher_better(ds.task);
  const std::string sel = selection_metric(ds.task);
  const bool use_val = !ds.val_idx.empty();
  double best_score = use_val ? (higher_better ? -1e300 : 1e300) : 1e300;
  std::vector<Tensor> best_params = model.params;
  int since_best = 0;

  TrainResult result;
  result.report.name = backbone_name(mcfg.backbone) + "+" + variant_name(mcfg.variant);
  result.report.seed = tcfg.seed;
  result.report.config_hash = config_hash(mcfg, tcfg);

  std::vector<int> order = ds.train_idx;
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    order_rng.shuffle(order);
    double train_loss_sum = 0.0;
    std::int64_t train_units = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::vector<const GraphContext*> chunk;
      for (; pos < order.size() && static_cast<int>(chunk.size()) < tcfg.batch_size; ++pos)
        chunk.push_back(&ctxs[static_cast<std::size_t>(order[pos])]);
      Tape tape;
      BoundModel bm = bind(model, tape, true);
      Batch batch = make_batch(chunk, mcfg, true, &flip_rng);
      ForwardOut fo = forward(bm, batch);
      Var l = loss_op(tape, fo.predictions, batch, loss);
      const double lval = tape.val(l).v[0];
      if (!std::isfinite(lval))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " (seed " + std::to_string(tcfg.seed) + ", batch of " +
                                 std::to_string(chunk.size()) + " graphs)");
      train_loss_sum += lval * static_cast<double>(chunk.size());
      train_units += static_cast<std::int64_t>(chunk.size());
      tape.backward(l);
      std::vector<Tensor> grads;
      grads.reserve(model.params.size());
      for (const Var v : bm.vars) grads.push_back(tape.grad(v));
      adam_step(model, grads, adam, tcfg);
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = train_loss_sum / static_cast<double>(std::max<std::int64_t>(1, train_units));
    double score = row.train_loss;
    if (use_val) {
      EvalOut ev = eval_split(model, ctxs, ds.val_idx, ds, loss, tcfg.batch_size);
      row.val_loss = ev.loss;
      row.val_metric = ev.metrics.count(sel) ? ev.metrics.at(sel) : ev.loss;
      score = row.val_metric;
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.report.rows.push_back(row);

    const bool improved = use_val ? (higher_better ? score > best_score : score < best_score)
                                  : score < best_score;
    if (improved) {
      best_score = score;
      best_params = model.params;
      since_best = 0;
    } else if (++since_best >= tcfg.patience) {
      break;
    }
  }
  model.params = best_params;

  for (const auto* split : {&ds.train_idx, &ds.val_idx, &ds.test_idx}) {
    if (split->empty()) continue;
    const char* tag = split == &ds.train_idx ? "train" : (split == &ds.val_idx ? "val" : "test");
    EvalOut ev = eval_split(model, ctxs, *split, ds, loss, tcfg.batch_size);
    for (const auto& [k, v] : ev.metrics) result.report.final_metrics[std::string(tag) + "_" + k] = v;
  }
  result.model = std::move(model);
  return result;
}

std::map<std::string, double> evaluate(const Model& m, const Dataset& ds,
                                       const std::vector<int>& idx, LossKind loss,
                                       std::uint64_t seed) {
  Rng part_rng = Rng(seed).stream("partition");
  std::vector<GraphContext> ctxs;
  ctxs.reserve(ds.graphs.size());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i)
    ctxs.push_back(prepare_graph(ds.graphs[i], m.cfg, part_rng.stream(i).next()));
  return eval_split(m, ctxs, idx, ds, resolve_loss(loss, ds.task), 32).metrics;
}

}  // namespace fn
