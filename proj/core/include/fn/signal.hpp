#pragma once

#include <cstdint>
#include <vector>

#include "fn/graph.hpp"
#include "fn/model.hpp"

namespace fn {

struct SignalPoint {
  int graph_id = 0;
  double h_sun = 0.0;        // propagated-signal measure, averaged over sources
  double r_tot_norm = 0.0;   // total resistance of G over the pair count
  double r_tot_f_norm = 0.0; // total resistance of G_f over original pairs (0 for plain)
};

// Appendix-style signal-propagation measurement: a p-dimensional random
// feature on one source node, zeros elsewhere, pushed through the frozen
// randomly initialized model; every unitary per-channel signal is weighted by
// its shortest-path distance from the source and normalized by
// p * max_{u != v} k(u, v). Zero-norm states contribute 0. Averaged over
// `sources_per_graph` sampled sources. Disconnected graphs are skipped.
std::vector<SignalPoint> signal_propagation(const Model& m, const std::vector<Graph>& graphs,
                                            int sources_per_graph, std::uint64_t seed);

}  // namespace fn
