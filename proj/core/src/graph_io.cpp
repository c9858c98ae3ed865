#include "fn/graph_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fn {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("io: " + path + ": " + what);
}

}  // namespace

void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  const int d_in = g.node_features.cols;
  out << g.num_nodes << ' ' << g.num_edges() << ' ' << d_in << '\n';
  for (int v = 0; v < g.num_nodes; ++v)
    for (int u : g.neighbors_of(v))
      if (v < u) out << v << ' ' << u << '\n';
  if (d_in > 0) {
    for (int v = 0; v < g.num_nodes; ++v) {
      for (int j = 0; j < d_in; ++j) {
        if (j) out << ' ';
        out << fmt_double(g.node_features(v, j));
      }
      out << '\n';
    }
  }
  if (!out) io_fail(path, "write failed");
}

Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open");
  int n = 0, d_in = 0;
  std::int64_t m = 0;
  if (!(in >> n >> m >> d_in)) io_fail(path, "bad header (want: n m d_in)");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (std::int64_t e = 0; e < m; ++e) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) io_fail(path, "truncated edge list");
    edges.emplace_back(u, v);
  }
  Matrix feats;
  if (d_in > 0) {
    feats = Matrix(n, d_in);
    for (int v = 0; v < n; ++v)
      for (int j = 0; j < d_in; ++j)
        if (!(in >> feats(v, j))) io_fail(path, "truncated feature block");
  }
  Graph g = from_edge_list(n, edges, d_in > 0 ? &feats : nullptr);
  read_labels(g, path + ".labels");
  return g;
}

void write_labels(const Graph& g, const std::string& path) {
  const bool has_node = !g.node_labels.empty();
  const bool has_graph = g.graph_label >= 0;
  const bool has_target = !g.graph_target.empty();
  if (!has_node && !has_graph && !has_target) return;
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  if (has_node) {
    out << "node\n";
    for (int l : g.node_labels) out << l << '\n';
  } else if (has_graph) {
    out << "graph " << g.graph_label << '\n';
  } else {
    out << "target " << g.graph_target.size() << '\n';
    for (std::size_t i = 0; i < g.graph_target.size(); ++i) {
      if (i) out << ' ';
      out << fmt_double(g.graph_target[i]);
    }
    out << '\n';
  }
}

void read_labels(Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  std::string kind;
  in >> kind;
  if (kind == "node") {
    g.node_labels.resize(static_cast<std::size_t>(g.num_nodes));
    for (int v = 0; v < g.num_nodes; ++v)
      if (!(in >> g.node_labels[static_cast<std::size_t>(v)])) io_fail(path, "truncated node labels");
  } else if (kind == "graph") {
    if (!(in >> g.graph_label)) io_fail(path, "bad graph label");
  } else if (kind == "target") {
    std::size_t k = 0;
    if (!(in >> k)) io_fail(path, "bad target size");
    g.graph_target.resize(k);
    for (std::size_t i = 0; i < k; ++i)
      if (!(in >> g.graph_target[i])) io_fail(path, "truncated target");
  } else {
    io_fail(path, "unknown label kind '" + kind + "'");
  }
}

void write_partition(const Partition& p, int num_nodes, const std::string& path) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  out << "partition " << num_nodes << ' ' << p.C << ' ' << p.k_hop << '\n';
  for (int v = 0; v < num_nodes; ++v) out << v << ' ' << p.base_assignment[static_cast<std::size_t>(v)] << '\n';
  for (const auto& blk : p.blocks) {
    for (std::size_t i = 0; i < blk.size(); ++i) {
      if (i) out << ' ';
      out << blk[i];
    }
    out << '\n';
  }
}

Partition read_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open");
  std::string magic;
  int n = 0;
  Partition p;
  if (!(in >> magic >> n >> p.C >> p.k_hop) || magic != "partition")
    io_fail(path, "bad header (want: partition n C k_hop)");
  p.base_assignment.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int v = 0, b = 0;
    if (!(in >> v >> b)) io_fail(path, "truncated assignment");
    if (v < 0 || v >= n) io_fail(path, "node id out of range");
    p.base_assignment[static_cast<std::size_t>(v)] = b;
  }
  in.ignore();  // rest of line
  p.blocks.resize(static_cast<std::size_t>(p.C));
  std::string line;
  for (int b = 0; b < p.C; ++b) {
    if (!std::getline(in, line)) io_fail(path, "truncated block lists");
    std::istringstream ls(line);
    int v = 0;
    while (ls >> v) p.blocks[static_cast<std::size_t>(b)].push_back(v);
  }
  return p;
}

namespace {

const char* task_name(Task t) {
  switch (t) {
    case Task::Classification: return "classification";
    case Task::Multilabel: return "multilabel";
    case Task::Regression: return "regression";
    case Task::NodeClassification: return "node-classification";
  }
  return "classification";
}

Task task_from_name(const std::string& s) {
  if (s == "classification") return Task::Classification;
  if (s == "multilabel") return Task::Multilabel;
  if (s == "regression") return Task::Regression;
  if (s == "node-classification") return Task::NodeClassification;
  throw std::runtime_error("io: unknown task '" + s + "'");
}

std::string graph_file(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "g%05d.el", i);
  return buf;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "graphs");
  nlohmann::json manifest;
  manifest["num_graphs"] = ds.graphs.size();
  manifest["task"] = task_name(ds.task);
  manifest["num_classes"] = ds.num_classes;
  manifest["target_dim"] = ds.target_dim;
  manifest["train"] = ds.train_idx;
  manifest["val"] = ds.val_idx;
  manifest["test"] = ds.test_idx;
  std::ofstream mout(fs::path(dir) / "manifest.json");
  if (!mout) io_fail(dir, "cannot write manifest.json");
  mout << manifest.dump(2) << '\n';
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const std::string p = (fs::path(dir) / "graphs" / graph_file(static_cast<int>(i))).string();
    write_edge_list(ds.graphs[i], p);
    write_labels(ds.graphs[i], p + ".labels");
  }
}

Dataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) io_fail(dir, "missing manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(min);
  Dataset ds;
  ds.task = task_from_name(manifest.at("task").get<std::string>());
  ds.num_classes = manifest.value("num_classes", 0);
  ds.target_dim = manifest.value("target_dim", 0);
  ds.train_idx = manifest.value("train", std::vector<int>{});
  ds.val_idx = manifest.value("val", std::vector<int>{});
  ds.test_idx = manifest.value("test", std::vector<int>{});
  const auto n = manifest.at("num_graphs").get<std::size_t>();
  ds.graphs.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    ds.graphs.push_back(read_edge_list((fs::path(dir) / "graphs" / graph_file(static_cast<int>(i))).string()));
  ds.validate();
  return ds;
}

}  // namespace fn
