#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fn/autodiff.hpp"
#include "fn/graph.hpp"
#include "fn/matrix.hpp"
#include "fn/partition.hpp"

namespace fn {

enum class Backbone { GCN, GINE, GatedGCN };
enum class Variant { Plain, FN, FN_M, FN_A };
enum class OmegaMode { Scalar, Vector, Off };
enum class HeadKind { GraphClassification, GraphRegression, Multilabel, NodeClassification };
enum class MixerSummary { Mean, MeanStd };
enum class PeKind { None, Lap, Rwse };
enum class PartitionMethod { Multilevel, Random, Louvain, Bfs };

struct ModelConfig {
  Backbone backbone = Backbone::GCN;
  Variant variant = Variant::FN;
  int layers = 4;
  int dim_h = 64;
  int C = 8;
  int k_hop = 1;
  OmegaMode omega_mode = OmegaMode::Scalar;
  bool use_hpf = true;
  int mixer_layers = 2;
  MixerSummary mixer_summary = MixerSummary::Mean;
  PeKind pe = PeKind::None;
  int pe_dim = 8;
  bool fractal_pe = false;
  HeadKind head = HeadKind::GraphClassification;
  int out_dim = 1;
  PartitionMethod partitioner = PartitionMethod::Multilevel;
  double balance_eps = 0.1;
  // Diagnostic mode: replaces activations by the identity for the smoothing
  // trend analysis on frozen weights.
  bool linear_activations = false;

  void validate() const;
};

// Named, ordered parameter set.
struct Model {
  ModelConfig cfg;
  int d_in = 0;
  int d_edge = 0;
  std::vector<std::string> names;
  std::vector<ad::Tensor> params;

  static Model init(ModelConfig cfg, int d_in, int d_edge, std::uint64_t seed);

  ad::Tensor& param(const std::string& name);
  const ad::Tensor& param(const std::string& name) const;
  std::int64_t num_params() const;
};

// Per-graph preprocessing reused across epochs: the (k-hop expanded)
// partition and positional encodings.
struct GraphContext {
  const Graph* g = nullptr;
  Partition part;
  Matrix node_pe;     // n x pe_dim, zero-padded; empty when pe = none
  Matrix fractal_pe;  // C x d_p; empty unless cfg.fractal_pe
  Matrix coarse_adj;  // C x C edge-count mode; filled for FN_A / fractal_pe
};

GraphContext prepare_graph(const Graph& g, const ModelConfig& cfg, std::uint64_t seed);

// Disjoint union of prepared graphs with merged block structure. Per-graph
// block ids stay contiguous: graph i owns blocks [i*C, (i+1)*C).
struct Batch {
  Graph merged;
  std::vector<int> graph_of_node;
  std::vector<int> graph_of_block;
  std::vector<std::vector<int>> blocks;  // global node ids
  std::vector<int> base_assignment;      // node -> global block id
  int num_graphs = 0;
  int C_total = 0;
  int C_per_graph = 0;
  Matrix node_pe;
  Matrix fractal_pe;
  Graph coarse_graph;                      // blocks as nodes (FN_A)
  std::vector<double> coarse_edge_weight;  // row-normalized A^C weights
  std::vector<double> gcn_edge_weight;     // 1/sqrt(d_v d_u) per directed edge

  std::vector<int> labels;       // graph classification
  Matrix targets;                // regression / multilabel, per graph
  std::vector<int> node_labels;  // node classification (-1 = unlabeled)
};

// Sign flips on Laplacian-eigenvector PEs are applied per column per graph
// when training and rng != nullptr.
Batch make_batch(const std::vector<const GraphContext*>& ctxs, const ModelConfig& cfg,
                 bool training, Rng* rng);

// Model parameters bound onto a tape.
struct BoundModel {
  const Model* model = nullptr;
  ad::Tape* tape = nullptr;
  std::vector<ad::Var> vars;
  std::unordered_map<std::string, int> index;

  ad::Var operator()(const std::string& name) const;
};

BoundModel bind(const Model& m, ad::Tape& tape, bool requires_grad);

struct ForwardOut {
  ad::Var predictions;     // per-graph or per-node depending on the head
  ad::Var node_states;     // H^(L) after the final update
  ad::Var fractal_states;  // F (mixed for FN_M); invalid for plain
};

ForwardOut forward(const BoundModel& bm, const Batch& batch);

// Reference backbone path with no fractal machinery compiled in; used to pin
// down variant=plain equivalence.
ForwardOut backbone_only_forward(const BoundModel& bm, const Batch& batch);

// Single-layer building blocks, exposed for direct testing.
ad::Var apply_backbone_layer(const BoundModel& bm, int layer, ad::Var h, const Batch& batch,
                             ad::Var edge_proj = ad::Var{-1});
struct FractalStep {
  ad::Var h_next;
  ad::Var fractal;
};
FractalStep apply_fractal_update(const BoundModel& bm, int layer, ad::Var h_tilde, const Batch& batch);
ad::Var apply_mixer_stack(const BoundModel& bm, ad::Var f, const Batch& batch);
ad::Var encode_inputs(const BoundModel& bm, const Batch& batch);

enum class LossKind { Auto, CrossEntropy, Bce, L1 };

LossKind resolve_loss(LossKind k, Task task);
ad::Var loss_op(ad::Tape& tape, ad::Var preds, const Batch& batch, LossKind kind);

HeadKind head_for_task(Task task);

std::string backbone_name(Backbone b);
std::string variant_name(Variant v);

}  // namespace fn
