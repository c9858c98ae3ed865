#pragma once

#include <string>

#include "fn/graph.hpp"
#include "fn/partition.hpp"

namespace fn {

// Edge-list text format:
//   header line:  n m d_in
//   m lines:      u v            (undirected edges, u < v)
//   n lines:      d_in reals     (only when d_in > 0; %.17g, bit-exact)
// Labels live in the sibling file "<path>.labels" (see write_labels).
void write_edge_list(const Graph& g, const std::string& path);
Graph read_edge_list(const std::string& path);

// Sibling label file, first token selects the layout:
//   graph <label>
//   node            followed by n integer labels, one per line (-1 unlabeled)
//   target <k>      followed by k reals on one line
void write_labels(const Graph& g, const std::string& path);
void read_labels(Graph& g, const std::string& path);  // no-op when file absent

// Partition text format:
//   header line:  partition n C k_hop
//   n lines:      node_id base_block
//   C lines:      expanded membership list of block i (sorted node ids)
void write_partition(const Partition& p, int num_nodes, const std::string& path);
Partition read_partition(const std::string& path);

// Dataset directory: manifest.json plus graphs/gNNNNN.el (+ .labels).
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

}  // namespace fn
