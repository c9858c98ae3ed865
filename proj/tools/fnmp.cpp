// fnmp: command-line front end for graph generation, partitioning, spectral
// analysis, training, and the bundled experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fn/checkpoint.hpp"
#include "fn/config.hpp"
#include "fn/experiments.hpp"
#include "fn/generators.hpp"
#include "fn/graph_io.hpp"
#include "fn/signal.hpp"
#include "fn/spectral.hpp"
#include "fn/train.hpp"

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

fn::RunConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides,
                          std::int64_t seed_flag, const std::string& out_flag) {
  fn::RunConfig cfg;
  if (!config_path.empty()) cfg.load_file(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must look like key=value: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed_flag >= 0) cfg.set("seed", std::to_string(seed_flag));
  if (!out_flag.empty()) cfg.set("out", out_flag);
  return cfg;
}

void write_run_manifest(const fn::RunConfig& cfg, const std::string& out_dir, const std::string& command) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  j["command"] = command;
  nlohmann::json resolved;
  for (const auto& [k, v] : cfg.resolved()) resolved[k] = v;
  j["config"] = resolved;
  std::ofstream out(std::filesystem::path(out_dir) / "run.manifest.json");
  out << j.dump(2) << '\n';
}

fn::Partition partition_with(const fn::Graph& g, const std::string& method, int c,
                             double balance_eps, int k_hop, std::uint64_t seed) {
  fn::Partition p;
  if (method == "multilevel") p = fn::partition_multilevel(g, c, balance_eps, seed);
  else if (method == "random") p = fn::partition_random(g, c, seed);
  else if (method == "louvain") p = fn::partition_louvain(g, c, seed);
  else if (method == "bfs") p = fn::partition_bfs(g, c, seed);
  else throw std::invalid_argument("unknown partition method '" + method + "'");
  if (k_hop > 0) p = fn::expand_k_hop(g, p, k_hop);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fnmp: fractal-node message passing toolkit"};
  app.require_subcommand(1);

  // ------------------------------------------------------------- generate
  auto* gen = app.add_subcommand("generate", "Generate synthetic graphs and datasets");
  gen->require_subcommand(1);

  auto* gen_er = gen->add_subcommand("er", "Erdos-Renyi graph -> edge-list file");
  int er_n = 100;
  double er_p = 0.05;
  std::int64_t er_seed = 1;
  std::string er_out = "g.el";
  gen_er->add_option("--n", er_n, "Node count")->required();
  gen_er->add_option("--p", er_p, "Edge probability")->required();
  gen_er->add_option("--seed", er_seed, "Generator seed");
  gen_er->add_option("--out", er_out, "Output edge-list path")->required();

  auto* gen_tree = gen->add_subcommand("tree", "TreeNeighboursMatch dataset -> directory");
  int tree_depth = 3, tree_samples = 1000;
  std::int64_t tree_seed = 1;
  std::string tree_out = "tree_ds";
  gen_tree->add_option("--depth", tree_depth, "Problem radius r")->required();
  gen_tree->add_option("--samples", tree_samples, "Sample count");
  gen_tree->add_option("--seed", tree_seed, "Generator seed");
  gen_tree->add_option("--out", tree_out, "Output dataset directory")->required();

  auto* gen_csl = gen->add_subcommand("csl", "Circular-skip-link dataset -> directory");
  int csl_n = 41, csl_copies = 15, csl_feature_dim = 0;
  std::int64_t csl_seed = 1;
  std::string csl_out = "csl_ds";
  std::vector<int> csl_skips = fn::csl_default_skips();
  gen_csl->add_option("--n", csl_n, "Cycle length");
  gen_csl->add_option("--skips", csl_skips, "Skip lengths");
  gen_csl->add_option("--copies", csl_copies, "Copies per class");
  gen_csl->add_option("--feature-dim", csl_feature_dim, "Random feature width (0 = constant)");
  gen_csl->add_option("--seed", csl_seed, "Generator seed");
  gen_csl->add_option("--out", csl_out, "Output dataset directory")->required();

  // ------------------------------------------------------------- partition
  auto* part_cmd = app.add_subcommand("partition", "Partition a graph into C blocks");
  std::string part_in, part_out = "p.txt", part_method = "multilevel";
  int part_c = 8, part_khop = 0;
  double part_eps = 0.1;
  std::int64_t part_seed = 1;
  part_cmd->add_option("--in", part_in, "Input edge-list file")->required();
  part_cmd->add_option("--method", part_method, "multilevel|random|louvain|bfs");
  part_cmd->add_option("--C", part_c, "Block count")->required();
  part_cmd->add_option("--khop", part_khop, "k-hop overlap expansion");
  part_cmd->add_option("--balance-eps", part_eps, "Balance tolerance");
  part_cmd->add_option("--seed", part_seed, "Partitioner seed");
  part_cmd->add_option("--out", part_out, "Output partition file")->required();

  // ---------------------------------------------------------------- analyze
  auto* analyze = app.add_subcommand("analyze", "Spectral analyses on one graph");
  analyze->require_subcommand(1);

  auto* an_res = analyze->add_subcommand("resistance", "Per-pair effective resistances R and R_f");
  std::string anr_in, anr_part, anr_out = "resistance.csv";
  int anr_pairs = 0;
  std::int64_t anr_seed = 1;
  an_res->add_option("--in", anr_in, "Input edge-list file")->required();
  an_res->add_option("--partition", anr_part, "Partition file")->required();
  an_res->add_option("--pairs", anr_pairs, "Sampled pairs (0 = all)");
  an_res->add_option("--seed", anr_seed, "Pair-sampling seed");
  an_res->add_option("--out", anr_out, "Output CSV");

  auto* an_ks = analyze->add_subcommand("ks", "KS structural-similarity score");
  std::string anks_in, anks_part, anks_out = "ks.csv";
  an_ks->add_option("--in", anks_in, "Input edge-list file")->required();
  an_ks->add_option("--partition", anks_part, "Partition file")->required();
  an_ks->add_option("--out", anks_out, "Output CSV");

  // ------------------------------------------------------------------ train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset directory");
  std::string train_config, train_out, train_data;
  std::vector<std::string> train_overrides;
  std::int64_t train_seed = -1;
  train_cmd->add_option("--config", train_config, "Config file (key = value lines)");
  train_cmd->add_option("--data", train_data, "Dataset directory (overrides dataset.path)");
  train_cmd->add_option("--set", train_overrides, "Config overrides key=value");
  train_cmd->add_option("--seed", train_seed, "Seed override");
  train_cmd->add_option("--out", train_out, "Output directory override");

  // ------------------------------------------------------------- experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run a named experiment");
  std::string exp_name, exp_config, exp_out;
  std::vector<std::string> exp_overrides;
  std::int64_t exp_seed = -1;
  exp_cmd->add_option("name", exp_name, "tree-match|csl|signal|ks-trend|resistance|scaling")->required();
  exp_cmd->add_option("--config", exp_config, "Config file");
  exp_cmd->add_option("--set", exp_overrides, "Config overrides key=value");
  exp_cmd->add_option("--seed", exp_seed, "Seed override");
  exp_cmd->add_option("--out", exp_out, "Output directory override");

  // ------------------------------------------------------------------ bench
  auto* bench_cmd = app.add_subcommand("bench", "Quick partitioner/forward timings on ER graphs");
  std::vector<int> bench_sizes{1000, 10000};
  std::int64_t bench_seed = 1;
  std::string bench_out;
  bench_cmd->add_option("--sizes", bench_sizes, "Graph sizes");
  bench_cmd->add_option("--seed", bench_seed, "Seed");
  bench_cmd->add_option("--out", bench_out, "Output directory (default: print to stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_er->parsed()) {
      const fn::Graph g = fn::erdos_renyi(er_n, er_p, static_cast<std::uint64_t>(er_seed));
      fn::write_edge_list(g, er_out);
      std::cout << "wrote " << er_out << ": n=" << g.num_nodes << " m=" << g.num_edges() << '\n';
    } else if (gen_tree->parsed()) {
      const fn::Dataset ds =
          fn::tree_neighbours_match(tree_depth, tree_samples, static_cast<std::uint64_t>(tree_seed));
      fn::write_dataset(ds, tree_out);
      std::cout << "wrote " << tree_out << ": " << ds.graphs.size() << " trees of depth " << tree_depth << '\n';
    } else if (gen_csl->parsed()) {
      const fn::Dataset ds = fn::csl_graphs(csl_n, csl_skips, csl_copies,
                                            static_cast<std::uint64_t>(csl_seed), csl_feature_dim);
      fn::write_dataset(ds, csl_out);
      std::cout << "wrote " << csl_out << ": " << ds.graphs.size() << " graphs, "
                << ds.num_classes << " classes\n";
    } else if (part_cmd->parsed()) {
      const fn::Graph g = fn::read_edge_list(part_in);
      const fn::Partition p = partition_with(g, part_method, part_c, part_eps, part_khop,
                                             static_cast<std::uint64_t>(part_seed));
      fn::write_partition(p, g.num_nodes, part_out);
      std::cout << "wrote " << part_out << ": C=" << p.C << " cut=" << fn::edge_cut(g, p) << '\n';
    } else if (an_res->parsed()) {
      const fn::Graph g = fn::read_edge_list(anr_in);
      const fn::Partition p = fn::read_partition(anr_part);
      const fn::ResistanceReport rep =
          fn::resistance_report(g, p, anr_pairs, static_cast<std::uint64_t>(anr_seed));
      std::ofstream out(anr_out);
      out << "graph_id,u,v,R,R_f\n";
      for (const auto& pr : rep.pairs)
        out << 0 << ',' << pr.u << ',' << pr.v << ',' << fmt(pr.R) << ',' << fmt(pr.R_f) << '\n';
      std::cout << "wrote " << anr_out << ": pairs=" << rep.pairs.size()
                << " total_R=" << fmt(rep.total_R) << " total_R_f=" << fmt(rep.total_R_f) << '\n';
    } else if (an_ks->parsed()) {
      const fn::Graph g = fn::read_edge_list(anks_in);
      const fn::Partition p = fn::read_partition(anks_part);
      const double score = fn::ks_similarity(g, p);
      std::ofstream out(anks_out);
      out << "graph_id,C,ks_score\n";
      out << 0 << ',' << p.C << ',' << fmt(score) << '\n';
      std::cout << "wrote " << anks_out << ": ks_score=" << fmt(score) << '\n';
    } else if (train_cmd->parsed()) {
      fn::RunConfig cfg = load_config(train_config, train_overrides, train_seed, train_out);
      if (!train_data.empty()) cfg.set("dataset.path", train_data);
      if (cfg.get_string("dataset.path").empty())
        throw std::invalid_argument("train: no dataset (set --data or dataset.path)");
      const fn::Dataset ds = fn::read_dataset(cfg.get_string("dataset.path"));
      const std::string out_dir = cfg.get_string("out");
      write_run_manifest(cfg, out_dir, "train");
      fn::TrainResult res = fn::train(cfg.model_config(), cfg.train_config(), ds);
      fn::save_checkpoint(res.model, (std::filesystem::path(out_dir) / "checkpoint").string());
      {
        std::ofstream metrics_csv(std::filesystem::path(out_dir) / "metrics.csv");
        metrics_csv << "epoch,train_loss,val_loss,val_metric\n";
        for (const auto& r : res.report.rows)
          metrics_csv << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_loss) << ','
                      << fmt(r.val_metric) << '\n';
        std::ofstream timing_csv(std::filesystem::path(out_dir) / "timings.csv");
        timing_csv << "epoch,wall_ms\n";
        for (const auto& r : res.report.rows) timing_csv << r.epoch << ',' << fmt(r.wall_ms) << '\n';
        std::ofstream final_csv(std::filesystem::path(out_dir) / "final_metrics.csv");
        final_csv << "metric,value\n";
        for (const auto& [k, v] : res.report.final_metrics) final_csv << k << ',' << fmt(v) << '\n';
      }
      std::cout << "trained " << res.report.name << " (config hash " << res.report.config_hash << ")\n";
      for (const auto& [k, v] : res.report.final_metrics) std::cout << "  " << k << " = " << fmt(v) << '\n';
    } else if (exp_cmd->parsed()) {
      fn::RunConfig cfg = load_config(exp_config, exp_overrides, exp_seed, exp_out);
      const std::string out_dir = cfg.get_string("out");
      const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
      write_run_manifest(cfg, out_dir, "experiment " + exp_name);
      if (exp_name == "tree-match") {
        fn::TreeMatchOptions opt;
        if (cfg.has("experiment.radii")) opt.radii = cfg.get_int_list("experiment.radii");
        if (cfg.has("experiment.train_samples")) opt.train_samples = static_cast<int>(cfg.get_int("experiment.train_samples"));
        if (cfg.has("experiment.test_samples")) opt.test_samples = static_cast<int>(cfg.get_int("experiment.test_samples"));
        if (cfg.has("experiment.seeds")) opt.seeds = static_cast<int>(cfg.get_int("experiment.seeds"));
        if (cfg.has("train.epochs")) opt.epochs = static_cast<int>(cfg.get_int("train.epochs"));
        const auto cells = fn::tree_match_experiment(opt, seed, out_dir);
        for (const auto& c : cells)
          std::cout << "r=" << c.radius << ' ' << c.model << " seed=" << c.seed
                    << " test_acc=" << fmt(c.test_acc) << '\n';
      } else if (exp_name == "csl") {
        fn::CslOptions opt;
        if (cfg.has("experiment.copies")) opt.copies = static_cast<int>(cfg.get_int("experiment.copies"));
        if (cfg.has("experiment.folds")) opt.folds = static_cast<int>(cfg.get_int("experiment.folds"));
        if (cfg.has("experiment.seeds")) opt.seeds = static_cast<int>(cfg.get_int("experiment.seeds"));
        if (cfg.has("experiment.feature_dim")) opt.feature_dim = static_cast<int>(cfg.get_int("experiment.feature_dim"));
        if (cfg.has("train.epochs")) opt.epochs = static_cast<int>(cfg.get_int("train.epochs"));
        if (cfg.get_string("model.pe") == "lap") opt.pe = fn::PeKind::Lap;
        const auto cells = fn::csl_experiment(opt, seed, out_dir);
        for (const auto& m : opt.models)
          std::cout << m << " mean_acc=" << fmt(fn::csl_mean_accuracy(cells, m)) << '\n';
      } else if (exp_name == "signal") {
        fn::SignalOptions opt;
        if (cfg.has("experiment.graphs")) opt.graphs = static_cast<int>(cfg.get_int("experiment.graphs"));
        if (cfg.has("experiment.sources")) opt.sources = static_cast<int>(cfg.get_int("experiment.sources"));
        if (cfg.has("experiment.seeds")) opt.init_seeds = static_cast<int>(cfg.get_int("experiment.seeds"));
        const auto rows = fn::signal_experiment(opt, seed, out_dir);
        std::cout << "signal rows: " << rows.size() << " (see signal.csv)\n";
      } else if (exp_name == "ks-trend") {
        fn::KsTrendOptions opt;
        if (cfg.has("experiment.graphs")) opt.graphs = static_cast<int>(cfg.get_int("experiment.graphs"));
        if (cfg.has("experiment.C_values")) opt.C_values = cfg.get_int_list("experiment.C_values");
        const auto rows = fn::ks_trend_experiment(opt, seed, out_dir);
        std::cout << "spearman(C, mean ks) = " << fmt(fn::ks_trend_spearman(rows)) << '\n';
      } else if (exp_name == "resistance") {
        fn::ResistanceOptions opt;
        if (cfg.has("experiment.graphs")) opt.graphs = static_cast<int>(cfg.get_int("experiment.graphs"));
        if (cfg.has("experiment.C_values")) opt.C_values = cfg.get_int_list("experiment.C_values");
        if (cfg.has("experiment.sample_pairs")) opt.sample_pairs = static_cast<int>(cfg.get_int("experiment.sample_pairs"));
        if (cfg.has("experiment.p")) opt.p = cfg.get_double("experiment.p");
        const auto res = fn::resistance_experiment(opt, seed, out_dir);
        std::int64_t violations = 0;
        for (const auto& pr : res.pairs) violations += pr.R_f > pr.R + 1e-9;
        std::cout << "pairs=" << res.pairs.size() << " violations=" << violations << '\n';
      } else if (exp_name == "scaling") {
        fn::ScalingOptions opt;
        if (cfg.has("experiment.sizes")) opt.sizes = cfg.get_int_list("experiment.sizes");
        const auto rows = fn::scaling_experiment(opt, seed, out_dir);
        std::vector<double> xs, ys;
        for (const auto& r : rows) {
          xs.push_back(r.n);
          ys.push_back(r.seconds_per_step);
          std::cout << "n=" << r.n << " s/step=" << fmt(r.seconds_per_step)
                    << " peak_bytes=" << fmt(r.peak_bytes) << '\n';
        }
        std::cout << "loglog slope = " << fmt(fn::loglog_slope(xs, ys)) << '\n';
      } else {
        throw std::invalid_argument("unknown experiment '" + exp_name + "'");
      }
    } else if (bench_cmd->parsed()) {
      fn::ScalingOptions opt;
      opt.sizes = bench_sizes;
      opt.steps = 2;
      const auto rows = fn::scaling_experiment(opt, static_cast<std::uint64_t>(bench_seed), bench_out);
      for (const auto& r : rows)
        std::cout << "n=" << r.n << " s/step=" << fmt(r.seconds_per_step)
                  << " peak_bytes=" << fmt(r.peak_bytes) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
