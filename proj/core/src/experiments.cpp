#include "fn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "fn/signal.hpp"
#include "fn/spectral.hpp"

namespace fn {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

void write_manifest(const std::string& out_dir, const std::string& name, std::uint64_t seed,
                    const nlohmann::json& config) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  j["experiment"] = name;
  j["seed"] = seed;
  j["config"] = config;
  std::ofstream out(std::filesystem::path(out_dir) / (name + ".manifest.json"));
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& out_dir, const std::string& file, const std::string& header) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(std::filesystem::path(out_dir) / file);
  out << header << '\n';
  return out;
}

Graph connected_er(int n, double p, Rng& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Graph g = erdos_renyi(n, p, rng.next());
    if (is_connected(g)) return g;
  }
  throw std::runtime_error("experiments: could not draw a connected ER graph");
}

// Sparse connected surrogate for peptide-scale graphs: a random spanning tree
// plus extra random edges up to the requested average degree.
Graph sparse_connected(int n, double avg_degree, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) edges.emplace_back(static_cast<int>(rng.uniform_int(v)), v);
  const auto target = static_cast<std::int64_t>(avg_degree * n / 2.0);
  std::set<std::pair<int, int>> have(edges.begin(), edges.end());
  int guard = 0;
  while (static_cast<std::int64_t>(have.size()) < target && guard++ < 20 * n) {
    int u = static_cast<int>(rng.uniform_int(n));
    int v = static_cast<int>(rng.uniform_int(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    have.emplace(u, v);
  }
  return from_edge_list(n, std::vector<std::pair<int, int>>(have.begin(), have.end()));
}

}  // namespace

void parallel_for_units(int count, const std::function<void(int)>& unit) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FN_THREADS")) threads = std::max(1, std::atoi(env));
  threads = std::clamp(threads, 1, 4);
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) unit(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          unit(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ModelConfig model_config_from_name(const std::string& name) {
  const auto plus = name.find('+');
  if (plus == std::string::npos)
    throw std::invalid_argument("model name must look like 'backbone+variant': " + name);
  const std::string b = name.substr(0, plus);
  const std::string v = name.substr(plus + 1);
  ModelConfig cfg;
  if (b == "gcn") cfg.backbone = Backbone::GCN;
  else if (b == "gine") cfg.backbone = Backbone::GINE;
  else if (b == "gatedgcn") cfg.backbone = Backbone::GatedGCN;
  else throw std::invalid_argument("unknown backbone '" + b + "'");
  if (v == "plain") cfg.variant = Variant::Plain;
  else if (v == "fn") cfg.variant = Variant::FN;
  else if (v == "fn_m") cfg.variant = Variant::FN_M;
  else if (v == "fn_a") cfg.variant = Variant::FN_A;
  else throw std::invalid_argument("unknown variant '" + v + "'");
  return cfg;
}

// ---------------------------------------------------------------- tree-match

std::vector<TreeMatchCell> tree_match_experiment(const TreeMatchOptions& opt, std::uint64_t seed,
                                                 const std::string& out_dir) {
  Rng root(seed);
  struct Unit {
    int radius;
    std::string model;
    std::uint64_t run_seed;
  };
  std::vector<Unit> units;
  for (int r : opt.radii)
    for (const auto& model : opt.models)
      for (int s = 0; s < opt.seeds; ++s)
        units.push_back({r, model, root.stream("run").stream(static_cast<std::uint64_t>(r))
                                        .stream(model).stream(static_cast<std::uint64_t>(s)).next()});

  // Shared per-radius datasets: identical data across models and seeds.
  std::vector<TreeMatchCell> cells(units.size());
  parallel_for_units(static_cast<int>(units.size()), [&](int i) {
    const Unit& u = units[static_cast<std::size_t>(i)];
    const std::uint64_t data_seed = Rng(seed).stream("data").stream(static_cast<std::uint64_t>(u.radius)).next();
    Dataset train_ds = tree_neighbours_match(u.radius, opt.train_samples, data_seed);
    // Carve a validation split off the tail.
    const int n_val = std::max(1, opt.train_samples / 10);
    train_ds.val_idx.assign(train_ds.train_idx.end() - n_val, train_ds.train_idx.end());
    train_ds.train_idx.resize(train_ds.train_idx.size() - static_cast<std::size_t>(n_val));

    ModelConfig mcfg = model_config_from_name(u.model);
    mcfg.layers = u.radius;
    mcfg.dim_h = opt.dim_h;
    mcfg.C = opt.C;
    mcfg.k_hop = opt.k_hop;

    TrainConfig tcfg;
    tcfg.epochs = opt.epochs;
    tcfg.lr = opt.lr;
    tcfg.batch_size = opt.batch_size;
    tcfg.patience = opt.patience;
    tcfg.seed = u.run_seed;

    TrainResult res = train(mcfg, tcfg, train_ds);

    Dataset test_ds = tree_neighbours_match(u.radius, opt.test_samples, data_seed + 1);
    test_ds.test_idx = test_ds.train_idx;
    test_ds.train_idx.clear();
    const auto test_metrics = evaluate(res.model, test_ds, test_ds.test_idx, LossKind::Auto, u.run_seed + 17);

    TreeMatchCell cell;
    cell.radius = u.radius;
    cell.model = u.model;
    cell.seed = u.run_seed;
    cell.train_acc = res.report.final_metrics.count("train_accuracy")
                         ? res.report.final_metrics.at("train_accuracy") : 0.0;
    cell.test_acc = test_metrics.at("accuracy");
    cells[static_cast<std::size_t>(i)] = cell;
  });

  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "tree_match.csv", "radius,model,seed,train_acc,test_acc");
    for (const auto& c : cells)
      csv << c.radius << ',' << c.model << ',' << c.seed << ',' << fmt(c.train_acc) << ','
          << fmt(c.test_acc) << '\n';
    write_manifest(out_dir, "tree_match", seed,
                   {{"radii", opt.radii}, {"train_samples", opt.train_samples},
                    {"test_samples", opt.test_samples}, {"seeds", opt.seeds},
                    {"models", opt.models}, {"dim_h", opt.dim_h}, {"C", opt.C},
                    {"k_hop", opt.k_hop}, {"epochs", opt.epochs}});
  }
  return cells;
}

// ----------------------------------------------------------------------- csl

std::vector<CslCell> csl_experiment(const CslOptions& opt, std::uint64_t seed,
                                    const std::string& out_dir) {
  const std::uint64_t data_seed = Rng(seed).stream("csl_data").next();
  const Dataset full = csl_graphs(opt.n, opt.skips, opt.copies, data_seed, opt.feature_dim);

  // Stratified fold ids: class c, copy k -> fold k mod folds.
  std::vector<int> fold_of(full.graphs.size());
  for (std::size_t k = 0; k < full.graphs.size(); ++k)
    fold_of[k] = static_cast<int>(k % static_cast<std::size_t>(opt.copies)) % opt.folds;

  struct Unit {
    std::string model;
    int seed_idx;
    int fold;
    std::uint64_t run_seed;
  };
  std::vector<Unit> units;
  Rng root(seed);
  for (const auto& model : opt.models)
    for (int s = 0; s < opt.seeds; ++s)
      for (int f = 0; f < opt.folds; ++f)
        units.push_back({model, s, f,
                         root.stream("run").stream(model).stream(static_cast<std::uint64_t>(s))
                             .stream(static_cast<std::uint64_t>(f)).next()});

  std::vector<CslCell> cells(units.size());
  parallel_for_units(static_cast<int>(units.size()), [&](int i) {
    const Unit& u = units[static_cast<std::size_t>(i)];
    Dataset ds = full;
    ds.train_idx.clear();
    ds.val_idx.clear();
    ds.test_idx.clear();
    const int val_fold = (u.fold + 1) % opt.folds;
    for (std::size_t k = 0; k < ds.graphs.size(); ++k) {
      if (fold_of[k] == u.fold) ds.test_idx.push_back(static_cast<int>(k));
      else if (fold_of[k] == val_fold) ds.val_idx.push_back(static_cast<int>(k));
      else ds.train_idx.push_back(static_cast<int>(k));
    }

    ModelConfig mcfg = model_config_from_name(u.model);
    mcfg.layers = opt.layers;
    mcfg.dim_h = opt.dim_h;
    mcfg.C = opt.C;
    mcfg.k_hop = opt.k_hop;
    mcfg.mixer_layers = opt.mixer_layers;
    mcfg.mixer_summary = MixerSummary::MeanStd;
    mcfg.pe = opt.pe;
    mcfg.pe_dim = opt.pe_dim;

    TrainConfig tcfg;
    tcfg.epochs = opt.epochs;
    tcfg.lr = opt.lr;
    tcfg.weight_decay = opt.weight_decay;
    tcfg.batch_size = opt.batch_size;
    tcfg.patience = opt.patience;
    tcfg.seed = u.run_seed;

    TrainResult res = train(mcfg, tcfg, ds);
    CslCell cell;
    cell.model = u.model;
    cell.seed = u.run_seed;
    cell.fold = u.fold;
    cell.test_acc = res.report.final_metrics.at("test_accuracy");
    cells[static_cast<std::size_t>(i)] = cell;
  });

  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "csl.csv", "model,seed,fold,test_acc");
    for (const auto& c : cells)
      csv << c.model << ',' << c.seed << ',' << c.fold << ',' << fmt(c.test_acc) << '\n';
    write_manifest(out_dir, "csl", seed,
                   {{"n", opt.n}, {"skips", opt.skips}, {"copies", opt.copies},
                    {"folds", opt.folds}, {"seeds", opt.seeds}, {"feature_dim", opt.feature_dim},
                    {"models", opt.models}, {"epochs", opt.epochs}, {"pe", opt.pe == PeKind::None ? "none" : "lap"}});
  }
  return cells;
}

double csl_mean_accuracy(const std::vector<CslCell>& cells, const std::string& model) {
  double acc = 0.0;
  int n = 0;
  for (const auto& c : cells)
    if (c.model == model) {
      acc += c.test_acc;
      n++;
    }
  return n == 0 ? 0.0 : acc / n;
}

// -------------------------------------------------------------------- signal

std::vector<SignalRow> signal_experiment(const SignalOptions& opt, std::uint64_t seed,
                                         const std::string& out_dir) {
  Rng root(seed);
  Rng graph_rng = root.stream("graphs");
  std::vector<Graph> graphs;
  graphs.reserve(static_cast<std::size_t>(opt.graphs));
  for (int i = 0; i < opt.graphs; ++i) {
    const double p = graph_rng.uniform(opt.p_min, opt.p_max);
    graphs.push_back(connected_er(opt.n, p, graph_rng));
  }

  ModelConfig plain;
  plain.backbone = Backbone::GCN;
  plain.variant = Variant::Plain;
  ModelConfig fnm = plain;
  fnm.variant = Variant::FN_M;
  for (ModelConfig* cfg : {&plain, &fnm}) {
    cfg->layers = opt.layers;
    cfg->dim_h = opt.dim_h;
    cfg->C = opt.C;
    cfg->k_hop = opt.k_hop;
    cfg->out_dim = 1;
  }

  std::vector<SignalRow> rows(graphs.size());
  std::vector<double> h_plain_acc(graphs.size(), 0.0), h_fn_acc(graphs.size(), 0.0);
  for (int s = 0; s < opt.init_seeds; ++s) {
    const std::uint64_t init_seed = root.stream("init").stream(static_cast<std::uint64_t>(s)).next();
    const std::uint64_t sig_seed = root.stream("sources").stream(static_cast<std::uint64_t>(s)).next();
    const Model m_plain = Model::init(plain, opt.dim_h, 0, init_seed);
    const Model m_fn = Model::init(fnm, opt.dim_h, 0, init_seed);
    const auto pts_plain = signal_propagation(m_plain, graphs, opt.sources, sig_seed);
    const auto pts_fn = signal_propagation(m_fn, graphs, opt.sources, sig_seed);
    if (pts_plain.size() != graphs.size() || pts_fn.size() != graphs.size())
      throw std::logic_error("signal: connected ER graphs were unexpectedly skipped");
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      h_plain_acc[i] += pts_plain[i].h_sun;
      h_fn_acc[i] += pts_fn[i].h_sun;
      rows[i].r_tot_norm = pts_plain[i].r_tot_norm;
    }
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    rows[i].graph_id = static_cast<int>(i);
    rows[i].h_plain = h_plain_acc[i] / opt.init_seeds;
    rows[i].h_fn = h_fn_acc[i] / opt.init_seeds;
  }

  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "signal.csv", "graph_id,r_tot_norm,h_plain,h_fn");
    for (const auto& r : rows)
      csv << r.graph_id << ',' << fmt(r.r_tot_norm) << ',' << fmt(r.h_plain) << ',' << fmt(r.h_fn) << '\n';
    write_manifest(out_dir, "signal", seed,
                   {{"graphs", opt.graphs}, {"n", opt.n}, {"layers", opt.layers},
                    {"dim_h", opt.dim_h}, {"C", opt.C}, {"init_seeds", opt.init_seeds},
                    {"sources", opt.sources}});
  }
  return rows;
}

// ------------------------------------------------------------------ ks-trend

std::vector<KsTrendRow> ks_trend_experiment(const KsTrendOptions& opt, std::uint64_t seed,
                                            const std::string& out_dir) {
  Rng rng = Rng(seed).stream("ks_trend");
  std::vector<KsTrendRow> rows;
  for (int gi = 0; gi < opt.graphs; ++gi) {
    const int n = opt.n_min + static_cast<int>(rng.uniform_int(opt.n_max - opt.n_min + 1));
    const Graph g = sparse_connected(n, opt.avg_degree, rng);
    for (int c : opt.C_values) {
      Partition part = partition_multilevel(g, c, 0.1, rng.next());
      if (opt.k_hop > 0) part = expand_k_hop(g, part, opt.k_hop);
      rows.push_back({gi, c, ks_similarity(g, part)});
    }
  }
  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "ks_trend.csv", "graph_id,C,ks_score");
    for (const auto& r : rows) csv << r.graph_id << ',' << r.C << ',' << fmt(r.ks) << '\n';
    write_manifest(out_dir, "ks_trend", seed,
                   {{"graphs", opt.graphs}, {"n_min", opt.n_min}, {"n_max", opt.n_max},
                    {"C_values", opt.C_values}, {"k_hop", opt.k_hop}});
  }
  return rows;
}

double ks_trend_spearman(const std::vector<KsTrendRow>& rows) {
  // Mean ks per C, then Spearman rank correlation against C.
  std::vector<int> cs;
  std::vector<double> means;
  for (const auto& r : rows) {
    auto it = std::find(cs.begin(), cs.end(), r.C);
    if (it == cs.end()) {
      cs.push_back(r.C);
      means.push_back(0.0);
    }
  }
  std::sort(cs.begin(), cs.end());
  std::vector<int> counts(cs.size(), 0);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::find(cs.begin(), cs.end(), r.C) - cs.begin());
    means[i] += r.ks;
    counts[i]++;
  }
  for (std::size_t i = 0; i < means.size(); ++i) means[i] /= std::max(1, counts[i]);

  const std::size_t k = cs.size();
  std::vector<std::size_t> rank(k);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
  // cs is ascending, so its ranks are 0..k-1 in order.
  double d2 = 0.0;
  for (std::size_t pos = 0; pos < k; ++pos) {
    const double diff = static_cast<double>(rank[pos]) - static_cast<double>(pos);
    d2 += diff * diff;
  }
  const double kk = static_cast<double>(k);
  return 1.0 - 6.0 * d2 / (kk * (kk * kk - 1.0));
}

// ---------------------------------------------------------------- resistance

ResistanceResult resistance_experiment(const ResistanceOptions& opt, std::uint64_t seed,
                                       const std::string& out_dir) {
  Rng rng = Rng(seed).stream("resistance");
  ResistanceResult result;
  for (int gi = 0; gi < opt.graphs; ++gi) {
    const int n = opt.n_min + static_cast<int>(rng.uniform_int(opt.n_max - opt.n_min + 1));
    const Graph g = connected_er(n, opt.p, rng);
    for (int c : opt.C_values) {
      Partition part = partition_multilevel(g, std::min(c, g.num_nodes), 0.1, rng.next());
      if (opt.k_hop > 0) part = expand_k_hop(g, part, opt.k_hop);
      const ResistanceReport rep = resistance_report(g, part, opt.sample_pairs, rng.next());
      for (const auto& pr : rep.pairs)
        result.pairs.push_back({gi, c, pr.u, pr.v, pr.R, pr.R_f});
      result.totals.push_back({gi, c, rep.total_R, rep.total_R_f});
    }
  }
  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "resistance_pairs.csv", "graph_id,C,u,v,R,R_f");
    for (const auto& r : result.pairs)
      csv << r.graph_id << ',' << r.C << ',' << r.u << ',' << r.v << ',' << fmt(r.R) << ',' << fmt(r.R_f) << '\n';
    auto tot = open_csv(out_dir, "resistance_totals.csv", "graph_id,C,total_R,total_R_f");
    for (const auto& r : result.totals)
      tot << r.graph_id << ',' << r.C << ',' << fmt(r.total_R) << ',' << fmt(r.total_R_f) << '\n';
    write_manifest(out_dir, "resistance", seed,
                   {{"graphs", opt.graphs}, {"n_min", opt.n_min}, {"n_max", opt.n_max},
                    {"p", opt.p}, {"C_values", opt.C_values}, {"k_hop", opt.k_hop},
                    {"sample_pairs", opt.sample_pairs}});
  }
  return result;
}

// ------------------------------------------------------------------- scaling

std::vector<ScalingRow> scaling_experiment(const ScalingOptions& opt, std::uint64_t seed,
                                           const std::string& out_dir) {
  Rng root(seed);
  std::vector<ScalingRow> rows;
  for (int n : opt.sizes) {
    Rng rng = root.stream("size").stream(static_cast<std::uint64_t>(n));
    const double p = opt.avg_degree / (n - 1);
    Graph g = erdos_renyi(n, p, rng.next());
    g.node_features = Matrix(n, opt.feature_dim);
    for (double& x : g.node_features.data) x = rng.normal();
    g.graph_label = 0;

    ModelConfig mcfg;
    mcfg.backbone = Backbone::GCN;
    mcfg.variant = Variant::FN;
    mcfg.layers = opt.layers;
    mcfg.dim_h = opt.dim_h;
    mcfg.C = opt.C;
    mcfg.k_hop = 1;
    mcfg.head = HeadKind::GraphClassification;
    mcfg.out_dim = 2;

    GraphContext ctx = prepare_graph(g, mcfg, rng.next());
    Model model = Model::init(mcfg, opt.feature_dim, 0, rng.next());
    TrainConfig tcfg;
    tcfg.lr = 1e-3;
    AdamState adam;

    // Batch assembly is per-dataset preprocessing; the timed unit is the
    // forward/backward/optimizer step.
    const Batch batch = make_batch({&ctx}, mcfg, false, nullptr);
    double total = 0.0;
    double peak = 0.0;
    for (int step = 0; step < opt.steps + 1; ++step) {
      const auto t0 = std::chrono::steady_clock::now();
      ad::Tape tape;
      BoundModel bm = bind(model, tape, true);
      ForwardOut fo = forward(bm, batch);
      ad::Var l = loss_op(tape, fo.predictions, batch, LossKind::CrossEntropy);
      tape.backward(l);
      std::vector<ad::Tensor> grads;
      for (const ad::Var v : bm.vars) grads.push_back(tape.grad(v));
      adam_step(model, grads, adam, tcfg);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      peak = std::max(peak, static_cast<double>(tape.peak_bytes()));
      if (step > 0) total += dt;  // first step warms up
    }
    rows.push_back({n, total / opt.steps, peak});
  }
  if (!out_dir.empty()) {
    auto csv = open_csv(out_dir, "scaling.csv", "n,seconds_per_step,peak_bytes");
    for (const auto& r : rows)
      csv << r.n << ',' << fmt(r.seconds_per_step) << ',' << fmt(r.peak_bytes) << '\n';
    write_manifest(out_dir, "scaling", seed,
                   {{"sizes", opt.sizes}, {"avg_degree", opt.avg_degree}, {"dim_h", opt.dim_h},
                    {"layers", opt.layers}, {"C", opt.C}, {"steps", opt.steps}});
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
}

}  // namespace fn
