#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fn/config.hpp"
#include "fn/generators.hpp"
#include "fn/graph_io.hpp"
#include "fn/partition.hpp"

using namespace fn;

TEST_SUITE_BEGIN("config_io");

TEST_CASE("defaults resolve and an empty file changes nothing") {
  const auto tmp = std::filesystem::temp_directory_path() / "fnmp_empty.cfg";
  std::ofstream(tmp.string()) << "# nothing but a comment\n\n";
  RunConfig cfg;
  cfg.load_file(tmp.string());
  CHECK(cfg.get_string("model.backbone") == "gcn");
  CHECK(cfg.get_int("model.layers") == 4);
  CHECK(cfg.get_double("train.lr") == doctest::Approx(1e-3));
  CHECK(cfg.get_bool("model.use_hpf"));
  CHECK_NOTHROW(cfg.model_config().validate());
}

TEST_CASE("override precedence: command line beats file beats default") {
  const auto tmp = std::filesystem::temp_directory_path() / "fnmp_prec.cfg";
  std::ofstream(tmp.string()) << "model.dim_h = 48\ntrain.lr = 0.01\n";
  RunConfig cfg;
  cfg.load_file(tmp.string());
  CHECK(cfg.get_int("model.dim_h") == 48);
  cfg.set("model.dim_h", "96");  // command-line override
  CHECK(cfg.get_int("model.dim_h") == 96);
  CHECK(cfg.get_double("train.lr") == doctest::Approx(0.01));
  CHECK(cfg.get_int("train.epochs") == 200);  // untouched default
}

TEST_CASE("unknown keys are rejected by name") {
  RunConfig cfg;
  try {
    cfg.set("model.backbon", "gcn");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("model.backbon") != std::string::npos);
  }
  const auto tmp = std::filesystem::temp_directory_path() / "fnmp_unknown.cfg";
  std::ofstream(tmp.string()) << "nonsense.key = 1\n";
  RunConfig cfg2;
  CHECK_THROWS_AS(cfg2.load_file(tmp.string()), std::invalid_argument);
}

TEST_CASE("config maps onto model and train structs") {
  RunConfig cfg;
  cfg.set("model.backbone", "gatedgcn");
  cfg.set("model.variant", "fn_m");
  cfg.set("model.omega", "vector");
  cfg.set("model.pe", "rwse");
  cfg.set("partition.method", "louvain");
  cfg.set("train.loss", "l1");
  const ModelConfig m = cfg.model_config();
  CHECK(m.backbone == Backbone::GatedGCN);
  CHECK(m.variant == Variant::FN_M);
  CHECK(m.omega_mode == OmegaMode::Vector);
  CHECK(m.pe == PeKind::Rwse);
  CHECK(m.partitioner == PartitionMethod::Louvain);
  const TrainConfig t = cfg.train_config();
  CHECK(t.loss == LossKind::L1);
}

TEST_CASE("partition file round trip") {
  const Graph g = erdos_renyi(25, 0.2, 9);
  Partition p = partition_multilevel(g, 4, 7);
  p = expand_k_hop(g, p, 1);
  const auto tmp = std::filesystem::temp_directory_path() / "fnmp_part.txt";
  write_partition(p, g.num_nodes, tmp.string());
  const Partition back = read_partition(tmp.string());
  CHECK(back.C == p.C);
  CHECK(back.k_hop == p.k_hop);
  CHECK(back.base_assignment == p.base_assignment);
  CHECK(back.blocks == p.blocks);
}

TEST_CASE("dataset directory round trip") {
  const Dataset ds = csl_graphs(11, {2, 3}, 2, 5, 3);
  const auto dir = std::filesystem::temp_directory_path() / "fnmp_ds";
  std::filesystem::remove_all(dir);
  write_dataset(ds, dir.string());
  const Dataset back = read_dataset(dir.string());
  REQUIRE(back.graphs.size() == ds.graphs.size());
  CHECK(back.task == ds.task);
  CHECK(back.num_classes == ds.num_classes);
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    CHECK(back.graphs[i].neighbors == ds.graphs[i].neighbors);
    CHECK(back.graphs[i].graph_label == ds.graphs[i].graph_label);
    CHECK(back.graphs[i].node_features.data == ds.graphs[i].node_features.data);
  }
}

TEST_SUITE_END();
