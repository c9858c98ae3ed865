#include "fn/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fn {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "out",
      "dataset.path",
      "model.backbone",
      "model.variant",
      "model.layers",
      "model.dim_h",
      "model.C",
      "model.k_hop",
      "model.omega",
      "model.use_hpf",
      "model.mixer_layers",
      "model.mixer_summary",
      "model.pe",
      "model.pe_dim",
      "model.fractal_pe",
      "partition.method",
      "partition.balance_eps",
      "train.epochs",
      "train.lr",
      "train.beta1",
      "train.beta2",
      "train.eps",
      "train.weight_decay",
      "train.batch_size",
      "train.patience",
      "train.loss",
      "experiment.radii",
      "experiment.train_samples",
      "experiment.test_samples",
      "experiment.seeds",
      "experiment.graphs",
      "experiment.sources",
      "experiment.copies",
      "experiment.folds",
      "experiment.feature_dim",
      "experiment.C_values",
      "experiment.sizes",
      "experiment.sample_pairs",
      "experiment.models",
      "experiment.n",
      "experiment.p",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() {
  values_ = {
      {"seed", "1"},
      {"out", "out"},
      {"dataset.path", ""},
      {"model.backbone", "gcn"},
      {"model.variant", "fn"},
      {"model.layers", "4"},
      {"model.dim_h", "64"},
      {"model.C", "8"},
      {"model.k_hop", "1"},
      {"model.omega", "scalar"},
      {"model.use_hpf", "true"},
      {"model.mixer_layers", "2"},
      {"model.mixer_summary", "mean"},
      {"model.pe", "none"},
      {"model.pe_dim", "8"},
      {"model.fractal_pe", "false"},
      {"partition.method", "multilevel"},
      {"partition.balance_eps", "0.1"},
      {"train.epochs", "200"},
      {"train.lr", "0.001"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.eps", "1e-8"},
      {"train.weight_decay", "0"},
      {"train.batch_size", "32"},
      {"train.patience", "50"},
      {"train.loss", "auto"},
  };
}

void RunConfig::check_known(const std::string& key) const {
  if (known_keys().count(key) == 0)
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check_known(key);
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  check_known(key);
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::get_string(const std::string& key) const {
  check_known(key);
  const auto it = values_.find(key);
  return it == values_.end() ? "" : it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t pos = 0;
  const std::int64_t v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("config: key '" + key + "' is not an integer: " + s);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("config: key '" + key + "' is not a number: " + s);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + s);
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  const std::string b = get_string("model.backbone");
  if (b == "gcn") cfg.backbone = Backbone::GCN;
  else if (b == "gine") cfg.backbone = Backbone::GINE;
  else if (b == "gatedgcn") cfg.backbone = Backbone::GatedGCN;
  else throw std::invalid_argument("config: unknown model.backbone '" + b + "'");

  const std::string v = get_string("model.variant");
  if (v == "plain") cfg.variant = Variant::Plain;
  else if (v == "fn") cfg.variant = Variant::FN;
  else if (v == "fn_m") cfg.variant = Variant::FN_M;
  else if (v == "fn_a") cfg.variant = Variant::FN_A;
  else throw std::invalid_argument("config: unknown model.variant '" + v + "'");

  cfg.layers = static_cast<int>(get_int("model.layers"));
  cfg.dim_h = static_cast<int>(get_int("model.dim_h"));
  cfg.C = static_cast<int>(get_int("model.C"));
  cfg.k_hop = static_cast<int>(get_int("model.k_hop"));

  const std::string om = get_string("model.omega");
  if (om == "scalar") cfg.omega_mode = OmegaMode::Scalar;
  else if (om == "vector") cfg.omega_mode = OmegaMode::Vector;
  else if (om == "off") cfg.omega_mode = OmegaMode::Off;
  else throw std::invalid_argument("config: unknown model.omega '" + om + "'");

  cfg.use_hpf = get_bool("model.use_hpf");
  cfg.mixer_layers = static_cast<int>(get_int("model.mixer_layers"));

  const std::string ms = get_string("model.mixer_summary");
  if (ms == "mean") cfg.mixer_summary = MixerSummary::Mean;
  else if (ms == "mean_std") cfg.mixer_summary = MixerSummary::MeanStd;
  else throw std::invalid_argument("config: unknown model.mixer_summary '" + ms + "'");

  const std::string pe = get_string("model.pe");
  if (pe == "none") cfg.pe = PeKind::None;
  else if (pe == "lap") cfg.pe = PeKind::Lap;
  else if (pe == "rwse") cfg.pe = PeKind::Rwse;
  else throw std::invalid_argument("config: unknown model.pe '" + pe + "'");
  cfg.pe_dim = static_cast<int>(get_int("model.pe_dim"));
  cfg.fractal_pe = get_bool("model.fractal_pe");

  const std::string pm = get_string("partition.method");
  if (pm == "multilevel") cfg.partitioner = PartitionMethod::Multilevel;
  else if (pm == "random") cfg.partitioner = PartitionMethod::Random;
  else if (pm == "louvain") cfg.partitioner = PartitionMethod::Louvain;
  else if (pm == "bfs") cfg.partitioner = PartitionMethod::Bfs;
  else throw std::invalid_argument("config: unknown partition.method '" + pm + "'");
  cfg.balance_eps = get_double("partition.balance_eps");
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = static_cast<int>(get_int("train.epochs"));
  t.lr = get_double("train.lr");
  t.beta1 = get_double("train.beta1");
  t.beta2 = get_double("train.beta2");
  t.eps = get_double("train.eps");
  t.weight_decay = get_double("train.weight_decay");
  t.batch_size = static_cast<int>(get_int("train.batch_size"));
  t.patience = static_cast<int>(get_int("train.patience"));
  t.seed = static_cast<std::uint64_t>(get_int("seed"));
  const std::string l = get_string("train.loss");
  if (l == "auto") t.loss = LossKind::Auto;
  else if (l == "cross-entropy") t.loss = LossKind::CrossEntropy;
  else if (l == "bce" || l == "binary-cross-entropy") t.loss = LossKind::Bce;
  else if (l == "l1") t.loss = LossKind::L1;
  else throw std::invalid_argument("config: unknown train.loss '" + l + "'");
  return t;
}

}  // namespace fn
