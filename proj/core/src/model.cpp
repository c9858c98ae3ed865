#include "fn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fn/positional.hpp"
#include "fn/rng.hpp"

namespace fn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void ModelConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("model: layers must be >= 1");
  if (dim_h <= 0) throw std::invalid_argument("model: dim_h must be positive");
  if (C < 1) throw std::invalid_argument("model: C must be >= 1");
  if (k_hop < 0) throw std::invalid_argument("model: k_hop must be >= 0");
  if (out_dim < 1) throw std::invalid_argument("model: out_dim must be >= 1");
  if (variant == Variant::FN_M && mixer_layers < 1)
    throw std::invalid_argument("model: mixer_layers must be >= 1 for the mixer variant");
  if (pe != PeKind::None && pe_dim < 1) throw std::invalid_argument("model: pe_dim must be >= 1");
}

std::string backbone_name(Backbone b) {
  switch (b) {
    case Backbone::GCN: return "gcn";
    case Backbone::GINE: return "gine";
    case Backbone::GatedGCN: return "gatedgcn";
  }
  return "gcn";
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::FN: return "fn";
    case Variant::FN_M: return "fn_m";
    case Variant::FN_A: return "fn_a";
  }
  return "fn";
}

HeadKind head_for_task(Task task) {
  switch (task) {
    case Task::Classification: return HeadKind::GraphClassification;
    case Task::Multilabel: return HeadKind::Multilabel;
    case Task::Regression: return HeadKind::GraphRegression;
    case Task::NodeClassification: return HeadKind::NodeClassification;
  }
  return HeadKind::GraphClassification;
}

Model Model::init(ModelConfig cfg, int d_in, int d_edge, std::uint64_t seed) {
  cfg.validate();
  if (d_in < 1) throw std::invalid_argument("model: d_in must be >= 1");
  Model m;
  m.cfg = cfg;
  m.d_in = d_in;
  m.d_edge = d_edge;
  Rng rng = Rng(seed).stream("init");
  const int d = cfg.dim_h;
  const bool fractal = cfg.variant != Variant::Plain;

  auto put = [&](const std::string& name, Tensor t) {
    m.names.push_back(name);
    m.params.push_back(std::move(t));
  };

  const int d_in_total = d_in + (cfg.pe != PeKind::None ? cfg.pe_dim : 0);
  put("input.W", Tensor::glorot(d_in_total, d, rng));
  put("input.b", Tensor({d}));
  if (cfg.backbone == Backbone::GINE && d_edge > 0) put("edge.W", Tensor::glorot(d_edge, d, rng));

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    switch (cfg.backbone) {
      case Backbone::GCN:
        put(p + "W", Tensor::glorot(d, d, rng));
        break;
      case Backbone::GatedGCN:
        put(p + "Omega", Tensor::glorot(d, d, rng));
        put(p + "W1", Tensor::glorot(d, d, rng));
        put(p + "W2", Tensor::glorot(d, d, rng));
        put(p + "W3", Tensor::glorot(d, d, rng));
        put(p + "gate_b", Tensor({d}));
        break;
      case Backbone::GINE:
        put(p + "eps", Tensor({1}));  // starts at 0
        put(p + "mlp_W1", Tensor::glorot(d, d, rng));
        put(p + "mlp_b1", Tensor({d}));
        put(p + "mlp_W2", Tensor::glorot(d, d, rng));
        put(p + "mlp_b2", Tensor({d}));
        break;
    }
    if (fractal) {
      // omega starts at zero: pure mean pooling, the high-frequency
      // contribution is learned.
      if (cfg.omega_mode == OmegaMode::Scalar) put(p + "omega", Tensor({1}));
      if (cfg.omega_mode == OmegaMode::Vector) put(p + "omega", Tensor({d}));
      if (cfg.variant == Variant::FN_A) put(p + "Wf", Tensor::glorot(d, d, rng));
      if (cfg.mixer_summary == MixerSummary::MeanStd) {
        put(p + "sum_W", Tensor::glorot(2 * d, d, rng));
        put(p + "sum_b", Tensor({d}));
      }
    }
  }
  if (fractal && cfg.variant == Variant::FN_M) {
    for (int l = 0; l < cfg.mixer_layers; ++l) {
      const std::string p = "mixer" + std::to_string(l) + ".";
      put(p + "W1", Tensor::glorot(cfg.C, cfg.C, rng));
      put(p + "W2", Tensor::glorot(cfg.C, cfg.C, rng));
      put(p + "W3", Tensor::glorot(d, d, rng));
      put(p + "W4", Tensor::glorot(d, d, rng));
    }
    if (cfg.fractal_pe) {
      const int d_p = std::max(1, std::min(cfg.C - 1, 8));
      put("fpe.T", Tensor::glorot(d_p, d, rng));
      put("fpe.O", Tensor::glorot(d, d, rng));
      put("fpe.b", Tensor({d}));
    }
  }
  put("head.W1", Tensor::glorot(d, d, rng));
  put("head.b1", Tensor({d}));
  put("head.W2", Tensor::glorot(d, cfg.out_dim, rng));
  put("head.b2", Tensor({cfg.out_dim}));
  return m;
}

ad::Tensor& Model::param(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return params[i];
  throw std::invalid_argument("model: unknown parameter '" + name + "'");
}

const ad::Tensor& Model::param(const std::string& name) const {
  return const_cast<Model*>(this)->param(name);
}

std::int64_t Model::num_params() const {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

GraphContext prepare_graph(const Graph& g, const ModelConfig& cfg, std::uint64_t seed) {
  GraphContext ctx;
  ctx.g = &g;
  if (cfg.variant != Variant::Plain) {
    const int c = std::min(cfg.C, g.num_nodes);
    switch (cfg.partitioner) {
      case PartitionMethod::Multilevel:
        ctx.part = partition_multilevel(g, c, cfg.balance_eps, seed);
        break;
      case PartitionMethod::Random:
        ctx.part = partition_random(g, c, seed);
        break;
      case PartitionMethod::Louvain:
        ctx.part = partition_louvain(g, c, seed);
        break;
      case PartitionMethod::Bfs:
        ctx.part = partition_bfs(g, c, seed);
        break;
    }
    if (cfg.k_hop > 0) ctx.part = expand_k_hop(g, ctx.part, cfg.k_hop);
    if (cfg.variant == Variant::FN_A || (cfg.variant == Variant::FN_M && cfg.fractal_pe))
      ctx.coarse_adj = coarsened_adjacency(g, ctx.part, CoarseMode::EdgeCount);
    if (cfg.variant == Variant::FN_M && cfg.fractal_pe)
      ctx.fractal_pe = fractal_pe_matrix(ctx.coarse_adj, std::max(1, std::min(cfg.C - 1, 8)));
  }
  if (cfg.pe == PeKind::Lap) ctx.node_pe = lap_pe(g, cfg.pe_dim);
  if (cfg.pe == PeKind::Rwse) ctx.node_pe = rwse(g, cfg.pe_dim);
  return ctx;
}

Batch make_batch(const std::vector<const GraphContext*>& ctxs, const ModelConfig& cfg,
                 bool training, Rng* rng) {
  if (ctxs.empty()) throw std::invalid_argument("make_batch: empty batch");
  Batch b;
  b.num_graphs = static_cast<int>(ctxs.size());
  std::vector<Graph> graphs;  // shallow copies for the union
  graphs.reserve(ctxs.size());
  for (const auto* c : ctxs) graphs.push_back(*c->g);
  std::vector<int> offsets;
  b.merged = disjoint_union(graphs, &offsets);

  const bool fractal = cfg.variant != Variant::Plain;
  b.graph_of_node.resize(static_cast<std::size_t>(b.merged.num_nodes));
  for (int i = 0; i < b.num_graphs; ++i) {
    const int lo = offsets[static_cast<std::size_t>(i)];
    const int hi = (i + 1 < b.num_graphs) ? offsets[static_cast<std::size_t>(i) + 1] : b.merged.num_nodes;
    for (int v = lo; v < hi; ++v) b.graph_of_node[static_cast<std::size_t>(v)] = i;
  }

  if (fractal) {
    b.C_per_graph = ctxs[0]->part.C;
    b.base_assignment.resize(static_cast<std::size_t>(b.merged.num_nodes));
    int block_base = 0;
    for (int i = 0; i < b.num_graphs; ++i) {
      const auto& part = ctxs[static_cast<std::size_t>(i)]->part;
      if (part.C != b.C_per_graph)
        throw std::invalid_argument("make_batch: graphs in a batch must share the block count");
      const int off = offsets[static_cast<std::size_t>(i)];
      for (int v = 0; v < static_cast<int>(part.base_assignment.size()); ++v)
        b.base_assignment[static_cast<std::size_t>(off + v)] = block_base + part.base_assignment[static_cast<std::size_t>(v)];
      for (const auto& blk : part.blocks) {
        std::vector<int> global;
        global.reserve(blk.size());
        for (int v : blk) global.push_back(off + v);
        b.blocks.push_back(std::move(global));
        b.graph_of_block.push_back(i);
      }
      block_base += part.C;
    }
    b.C_total = block_base;

    if (cfg.variant == Variant::FN_A) {
      // Block-diagonal coarse graph with row-normalized edge-count weights.
      std::vector<std::pair<int, int>> cedges;
      int base = 0;
      for (const auto* c : ctxs) {
        const Matrix& a = c->coarse_adj;
        for (int i = 0; i < a.rows; ++i)
          for (int j = i + 1; j < a.cols; ++j)
            if (a(i, j) > 0.0) cedges.emplace_back(base + i, base + j);
        base += a.rows;
      }
      b.coarse_graph = from_edge_list(b.C_total, cedges);
      b.coarse_edge_weight.assign(static_cast<std::size_t>(b.coarse_graph.num_directed_edges()), 0.0);
      base = 0;
      for (const auto* c : ctxs) {
        const Matrix& a = c->coarse_adj;
        for (int i = 0; i < a.rows; ++i) {
          double row_sum = 0.0;
          for (int j = 0; j < a.cols; ++j)
            if (j != i) row_sum += a(i, j);
          if (row_sum <= 0.0) continue;
          for (int j = 0; j < a.cols; ++j) {
            if (j == i || a(i, j) <= 0.0) continue;
            const auto e = b.coarse_graph.edge_index(base + i, base + j);
            b.coarse_edge_weight[static_cast<std::size_t>(e)] = a(i, j) / row_sum;
          }
        }
        base += a.rows;
      }
    }
    if (cfg.variant == Variant::FN_M && cfg.fractal_pe) {
      const int d_p = std::max(1, std::min(cfg.C - 1, 8));
      b.fractal_pe = Matrix(b.C_total, d_p);
      int base = 0;
      for (const auto* c : ctxs) {
        for (int i = 0; i < c->fractal_pe.rows; ++i)
          for (int j = 0; j < c->fractal_pe.cols; ++j) b.fractal_pe(base + i, j) = c->fractal_pe(i, j);
        base += c->part.C;
      }
    }
  }

  if (cfg.pe != PeKind::None) {
    b.node_pe = Matrix(b.merged.num_nodes, cfg.pe_dim);
    for (int i = 0; i < b.num_graphs; ++i) {
      const Matrix& pe = ctxs[static_cast<std::size_t>(i)]->node_pe;
      const int off = offsets[static_cast<std::size_t>(i)];
      std::vector<double> flip(static_cast<std::size_t>(cfg.pe_dim), 1.0);
      if (training && rng != nullptr && cfg.pe == PeKind::Lap)
        for (auto& f : flip) f = rng->uniform() < 0.5 ? -1.0 : 1.0;
      for (int v = 0; v < pe.rows; ++v)
        for (int j = 0; j < pe.cols; ++j) b.node_pe(off + v, j) = flip[static_cast<std::size_t>(j)] * pe(v, j);
    }
  }

  // Symmetric-normalized GCN weights on the merged graph.
  if (cfg.backbone == Backbone::GCN) {
    b.gcn_edge_weight.resize(static_cast<std::size_t>(b.merged.num_directed_edges()));
    for (int v = 0; v < b.merged.num_nodes; ++v)
      for (std::int64_t e = b.merged.offsets[static_cast<std::size_t>(v)]; e < b.merged.offsets[static_cast<std::size_t>(v) + 1]; ++e) {
        const int u = b.merged.neighbors[static_cast<std::size_t>(e)];
        b.gcn_edge_weight[static_cast<std::size_t>(e)] =
            1.0 / std::sqrt(static_cast<double>(b.merged.degree(v)) * static_cast<double>(b.merged.degree(u)));
      }
  }

  // Targets.
  bool any_graph_label = false, any_target = false, any_node_label = false;
  int target_dim = 0;
  for (const auto* c : ctxs) {
    any_graph_label = any_graph_label || c->g->graph_label >= 0;
    any_target = any_target || !c->g->graph_target.empty();
    any_node_label = any_node_label || !c->g->node_labels.empty();
    target_dim = std::max(target_dim, static_cast<int>(c->g->graph_target.size()));
  }
  if (any_graph_label)
    for (const auto* c : ctxs) b.labels.push_back(c->g->graph_label);
  if (any_target) {
    b.targets = Matrix(b.num_graphs, target_dim);
    for (int i = 0; i < b.num_graphs; ++i)
      for (int j = 0; j < static_cast<int>(ctxs[static_cast<std::size_t>(i)]->g->graph_target.size()); ++j)
        b.targets(i, j) = ctxs[static_cast<std::size_t>(i)]->g->graph_target[static_cast<std::size_t>(j)];
  }
  if (any_node_label) b.node_labels = b.merged.node_labels;
  return b;
}

BoundModel bind(const Model& m, Tape& tape, bool requires_grad) {
  BoundModel bm;
  bm.model = &m;
  bm.tape = &tape;
  bm.vars.reserve(m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    bm.vars.push_back(tape.leaf(m.params[i], requires_grad));
    bm.index.emplace(m.names[i], static_cast<int>(i));
  }
  return bm;
}

Var BoundModel::operator()(const std::string& name) const {
  const auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument("bound model: unknown parameter '" + name + "'");
  return vars[static_cast<std::size_t>(it->second)];
}

namespace {

Var activation(const BoundModel& bm, Var x) {
  if (bm.model->cfg.linear_activations) return x;
  return ad::relu(*bm.tape, x);
}

// Receiver/sender index arrays aligned to the CSR directed edge order.
void edge_endpoints(const Graph& g, std::vector<int>& recv, std::vector<int>& send) {
  recv.clear();
  send.clear();
  recv.reserve(static_cast<std::size_t>(g.num_directed_edges()));
  send.reserve(static_cast<std::size_t>(g.num_directed_edges()));
  for (int v = 0; v < g.num_nodes; ++v)
    for (int u : g.neighbors_of(v)) {
      recv.push_back(v);
      send.push_back(u);
    }
}

Var gcn_layer(const BoundModel& bm, int l, Var h, const Batch& batch) {
  Tape& t = *bm.tape;
  const std::string p = "layer" + std::to_string(l) + ".";
  Var agg = ad::sparse_neighbor_aggregate(t, batch.merged, h, batch.gcn_edge_weight);
  return ad::linear_residual_act(t, h, agg, bm(p + "W"), bm.model->cfg.linear_activations);
}

Var gatedgcn_layer(const BoundModel& bm, int l, Var h, const Batch& batch) {
  Tape& t = *bm.tape;
  const std::string p = "layer" + std::to_string(l) + ".";
  std::vector<int> recv, send;
  edge_endpoints(batch.merged, recv, send);
  Var a2 = ad::matmul(t, h, bm(p + "W2"));
  Var a3 = ad::matmul(t, h, bm(p + "W3"));
  Var pre = ad::add_rowvec(t, ad::add(t, ad::gather_rows(t, a2, recv), ad::gather_rows(t, a3, send)),
                           bm(p + "gate_b"));
  Var gate = ad::sigmoid(t, pre);
  Var msg = ad::mul(t, gate, ad::gather_rows(t, ad::matmul(t, h, bm(p + "W1")), send));
  Var summed = ad::scatter_sum_rows(t, msg, recv, batch.merged.num_nodes);
  return ad::linear_residual_act(t, summed, h, bm(p + "Omega"), bm.model->cfg.linear_activations);
}

Var gine_layer(const BoundModel& bm, int l, Var h, const Batch& batch, Var edge_proj) {
  Tape& t = *bm.tape;
  const std::string p = "layer" + std::to_string(l) + ".";
  std::vector<int> recv, send;
  edge_endpoints(batch.merged, recv, send);
  Var msg = ad::gather_rows(t, h, send);
  if (edge_proj.valid()) msg = ad::add(t, msg, edge_proj);
  msg = activation(bm, msg);
  Var summed = ad::scatter_sum_rows(t, msg, recv, batch.merged.num_nodes);
  Var selfterm = ad::add(t, h, ad::mul_scalar(t, h, bm(p + "eps")));
  Var pre = ad::add(t, selfterm, summed);
  Var hidden = activation(bm, ad::add_rowvec(t, ad::matmul(t, pre, bm(p + "mlp_W1")), bm(p + "mlp_b1")));
  return ad::add_rowvec(t, ad::matmul(t, hidden, bm(p + "mlp_W2")), bm(p + "mlp_b2"));
}

Var backbone_layer(const BoundModel& bm, int l, Var h, const Batch& batch, Var edge_proj) {
  switch (bm.model->cfg.backbone) {
    case Backbone::GCN: return gcn_layer(bm, l, h, batch);
    case Backbone::GatedGCN: return gatedgcn_layer(bm, l, h, batch);
    case Backbone::GINE: return gine_layer(bm, l, h, batch, edge_proj);
  }
  throw std::logic_error("unreachable backbone");
}

// Personalized fractal message: m_v = f_{c(v)} + omega (.) (h_v - LPF_{c(v)}),
// delivered through the base assignment; LPF runs over the expanded blocks.
FractalStep fractal_update(const BoundModel& bm, int l, Var h_tilde, const Batch& batch) {
  Tape& t = *bm.tape;
  const ModelConfig& cfg = bm.model->cfg;
  const std::string p = "layer" + std::to_string(l) + ".";

  Var lpf = ad::segment_mean_blocks(t, h_tilde, batch.blocks);
  Var f_base = lpf;
  if (cfg.variant == Variant::FN_A) {
    Var agg = ad::sparse_neighbor_aggregate(t, batch.coarse_graph, lpf, batch.coarse_edge_weight);
    f_base = ad::add(t, lpf, ad::matmul(t, agg, bm(p + "Wf")));
  }

  const bool hpf = cfg.use_hpf && cfg.omega_mode != OmegaMode::Off;
  Var omega = hpf ? bm(p + "omega") : ad::Var{-1};
  FractalStep out;
  out.h_next = ad::fractal_message(t, h_tilde, f_base, lpf, batch.base_assignment, omega);
  out.fractal = f_base;
  if (cfg.mixer_summary == MixerSummary::MeanStd) {
    Var sq = ad::mul(t, h_tilde, h_tilde);
    Var mean_sq = ad::segment_mean_blocks(t, sq, batch.blocks);
    Var variance = ad::sub(t, mean_sq, ad::mul(t, lpf, lpf));
    Var std_dev = ad::sqrt_op(t, ad::add_const(t, variance, 1e-8));
    Var cat = ad::concat_cols(t, f_base, std_dev);
    out.fractal = ad::add_rowvec(t, ad::matmul(t, cat, bm(p + "sum_W")), bm(p + "sum_b"));
  }
  return out;
}

Var mixer_block(const BoundModel& bm, int l, Var f) {
  Tape& t = *bm.tape;
  const std::string p = "mixer" + std::to_string(l) + ".";
  // Token mixing across the C fractal nodes.
  Var tok = ad::matmul(t, bm(p + "W2"), ad::gelu(t, ad::matmul(t, bm(p + "W1"), ad::layer_norm(t, f))));
  Var u = ad::add(t, f, tok);
  // Channel mixing across dim_h.
  Var ch = ad::transpose(
      t, ad::matmul(t, bm(p + "W4"), ad::gelu(t, ad::matmul(t, bm(p + "W3"), ad::layer_norm(t, ad::transpose(t, u))))));
  return ad::add(t, u, ch);
}

Var apply_mixer(const BoundModel& bm, Var f, const Batch& batch) {
  Tape& t = *bm.tape;
  const ModelConfig& cfg = bm.model->cfg;
  Var out{-1};
  for (int g = 0; g < batch.num_graphs; ++g) {
    std::vector<int> idx(static_cast<std::size_t>(batch.C_per_graph));
    for (int i = 0; i < batch.C_per_graph; ++i) idx[static_cast<std::size_t>(i)] = g * batch.C_per_graph + i;
    Var slice = ad::gather_rows(t, f, idx);
    for (int l = 0; l < cfg.mixer_layers; ++l) slice = mixer_block(bm, l, slice);
    Var placed = ad::scatter_sum_rows(t, slice, idx, batch.C_total);
    out = out.valid() ? ad::add(t, out, placed) : placed;
  }
  return out;
}

Var input_encode(const BoundModel& bm, const Batch& batch) {
  Tape& t = *bm.tape;
  const Matrix& feats = batch.merged.node_features;
  if (feats.empty()) throw std::invalid_argument("forward: graphs carry no node features");
  Tensor x({feats.rows, feats.cols + batch.node_pe.cols});
  for (int i = 0; i < feats.rows; ++i) {
    for (int j = 0; j < feats.cols; ++j) x.at(i, j) = feats(i, j);
    for (int j = 0; j < batch.node_pe.cols; ++j) x.at(i, feats.cols + j) = batch.node_pe(i, j);
  }
  Var in = t.leaf(std::move(x), false);
  return ad::add_rowvec(t, ad::matmul(t, in, bm("input.W")), bm("input.b"));
}

Var edge_encode(const BoundModel& bm, const Batch& batch) {
  Tape& t = *bm.tape;
  if (bm.model->cfg.backbone != Backbone::GINE || bm.model->d_edge <= 0 || batch.merged.edge_features.empty())
    return Var{-1};
  const Matrix& ef = batch.merged.edge_features;
  Tensor e({ef.rows, ef.cols});
  for (int i = 0; i < ef.rows; ++i)
    for (int j = 0; j < ef.cols; ++j) e.at(i, j) = ef(i, j);
  return ad::matmul(t, t.leaf(std::move(e), false), bm("edge.W"));
}

Var head_mlp(const BoundModel& bm, Var pooled) {
  Tape& t = *bm.tape;
  Var hidden = activation(bm, ad::add_rowvec(t, ad::matmul(t, pooled, bm("head.W1")), bm("head.b1")));
  return ad::add_rowvec(t, ad::matmul(t, hidden, bm("head.W2")), bm("head.b2"));
}

}  // namespace

ad::Var apply_backbone_layer(const BoundModel& bm, int layer, Var h, const Batch& batch, Var edge_proj) {
  return backbone_layer(bm, layer, h, batch, edge_proj);
}

FractalStep apply_fractal_update(const BoundModel& bm, int layer, Var h_tilde, const Batch& batch) {
  return fractal_update(bm, layer, h_tilde, batch);
}

ad::Var apply_mixer_stack(const BoundModel& bm, Var f, const Batch& batch) {
  return apply_mixer(bm, f, batch);
}

ad::Var encode_inputs(const BoundModel& bm, const Batch& batch) { return input_encode(bm, batch); }

ForwardOut forward(const BoundModel& bm, const Batch& batch) {
  Tape& t = *bm.tape;
  const ModelConfig& cfg = bm.model->cfg;
  if (cfg.variant == Variant::Plain) return backbone_only_forward(bm, batch);

  Var edge_proj = edge_encode(bm, batch);
  Var h = input_encode(bm, batch);
  Var f{-1};
  for (int l = 0; l < cfg.layers; ++l) {
    Var ht = backbone_layer(bm, l, h, batch, edge_proj);
    FractalStep fo = fractal_update(bm, l, ht, batch);
    h = fo.h_next;
    f = fo.fractal;
  }

  if (cfg.variant == Variant::FN_M) {
    if (cfg.fractal_pe) {
      const Matrix& pe = batch.fractal_pe;
      Tensor pt({pe.rows, pe.cols});
      for (int i = 0; i < pe.rows; ++i)
        for (int j = 0; j < pe.cols; ++j) pt.at(i, j) = pe(i, j);
      Var pvar = t.leaf(std::move(pt), false);
      f = ad::add_rowvec(t, ad::add(t, ad::matmul(t, f, bm("fpe.O")), ad::matmul(t, pvar, bm("fpe.T"))),
                         bm("fpe.b"));
    }
    f = apply_mixer(bm, f, batch);
  }

  ForwardOut out;
  out.node_states = h;
  out.fractal_states = f;
  switch (cfg.head) {
    case HeadKind::GraphClassification:
    case HeadKind::GraphRegression:
    case HeadKind::Multilabel: {
      Var pooled = cfg.variant == Variant::FN_M
                       ? ad::segment_mean(t, f, batch.graph_of_block, batch.num_graphs)
                       : ad::segment_mean(t, h, batch.graph_of_node, batch.num_graphs);
      out.predictions = head_mlp(bm, pooled);
      break;
    }
    case HeadKind::NodeClassification: {
      Var final_states = ad::add(t, h, ad::segment_broadcast(t, f, batch.base_assignment));
      out.predictions = head_mlp(bm, final_states);
      break;
    }
  }
  return out;
}

ForwardOut backbone_only_forward(const BoundModel& bm, const Batch& batch) {
  Tape& t = *bm.tape;
  const ModelConfig& cfg = bm.model->cfg;
  Var edge_proj = edge_encode(bm, batch);
  Var h = input_encode(bm, batch);
  for (int l = 0; l < cfg.layers; ++l) h = backbone_layer(bm, l, h, batch, edge_proj);
  ForwardOut out;
  out.node_states = h;
  out.fractal_states = Var{-1};
  switch (cfg.head) {
    case HeadKind::GraphClassification:
    case HeadKind::GraphRegression:
    case HeadKind::Multilabel:
      out.predictions = head_mlp(bm, ad::segment_mean(t, h, batch.graph_of_node, batch.num_graphs));
      break;
    case HeadKind::NodeClassification:
      out.predictions = head_mlp(bm, h);
      break;
  }
  return out;
}

LossKind resolve_loss(LossKind k, Task task) {
  if (k != LossKind::Auto) return k;
  switch (task) {
    case Task::Classification:
    case Task::NodeClassification: return LossKind::CrossEntropy;
    case Task::Multilabel: return LossKind::Bce;
    case Task::Regression: return LossKind::L1;
  }
  return LossKind::CrossEntropy;
}

ad::Var loss_op(Tape& tape, Var preds, const Batch& batch, LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: {
      const int rows = tape.val(preds).rows();
      const auto& labels =
          static_cast<int>(batch.node_labels.size()) == rows ? batch.node_labels : batch.labels;
      if (labels.empty()) throw std::invalid_argument("loss: no labels in batch");
      return ad::cross_entropy(tape, preds, labels);
    }
    case LossKind::Bce: {
      Tensor tgt({batch.targets.rows, batch.targets.cols}, batch.targets.data);
      return ad::bce_with_logits(tape, preds, tgt);
    }
    case LossKind::L1: {
      Tensor tgt({batch.targets.rows, batch.targets.cols}, batch.targets.data);
      return ad::l1_loss(tape, preds, tgt);
    }
    case LossKind::Auto: break;
  }
  throw std::invalid_argument("loss: unresolved loss kind");
}

}  // namespace fn
