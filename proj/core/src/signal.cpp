#include "fn/signal.hpp"

#include <cmath>

#include "fn/rng.hpp"
#include "fn/spectral.hpp"

namespace fn {

std::vector<SignalPoint> signal_propagation(const Model& m, const std::vector<Graph>& graphs,
                                            int sources_per_graph, std::uint64_t seed) {
  Rng root = Rng(seed).stream("signal");
  const int p = m.d_in;
  std::vector<SignalPoint> out;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    if (!is_connected(g) || g.num_nodes < 2) continue;  // excluded with a warning upstream

    Rng rng = root.stream(gi);
    GraphContext ctx = prepare_graph(g, m.cfg, rng.next());
    // Features are injected per source below; reuse the context otherwise.
    Graph with_features = g;

    SignalPoint pt;
    pt.graph_id = static_cast<int>(gi);
    const double pair_count = 0.5 * g.num_nodes * (g.num_nodes - 1);
    pt.r_tot_norm = total_resistance(g) / pair_count;
    if (m.cfg.variant != Variant::Plain) {
      const Matrix pinv_f = pseudoinverse(augmented_laplacian(g, ctx.part));
      double tr = 0.0, ones = 0.0;
      for (int i = 0; i < g.num_nodes; ++i) {
        tr += pinv_f(i, i);
        for (int j = 0; j < g.num_nodes; ++j) ones += pinv_f(i, j);
      }
      pt.r_tot_f_norm = (g.num_nodes * tr - ones) / pair_count;
    }

    double h_sun_acc = 0.0;
    for (int s = 0; s < sources_per_graph; ++s) {
      const int source = static_cast<int>(rng.uniform_int(g.num_nodes));
      with_features.node_features = Matrix(g.num_nodes, p);
      for (int j = 0; j < p; ++j) with_features.node_features(source, j) = rng.normal();

      GraphContext sctx = ctx;
      sctx.g = &with_features;
      ad::Tape tape;
      BoundModel bm = bind(m, tape, false);
      Batch batch = make_batch({&sctx}, m.cfg, false, nullptr);
      ForwardOut fo = forward(bm, batch);
      const ad::Tensor& h = tape.val(fo.node_states);

      const auto dist = bfs_distances(g, source);
      double max_k = 0.0;
      for (int v = 0; v < g.num_nodes; ++v)
        if (v != source) max_k = std::max(max_k, dist[static_cast<std::size_t>(v)]);
      if (max_k <= 0.0) continue;
      double acc = 0.0;
      for (int u = 0; u < g.num_nodes; ++u) {
        if (u == source) continue;
        for (int t = 0; t < p; ++t) {
          const double x = h.at(u, t);
          if (x == 0.0) continue;  // zero-norm states contribute nothing
          acc += (x > 0.0 ? 1.0 : -1.0) * dist[static_cast<std::size_t>(u)];
        }
      }
      h_sun_acc += acc / (p * max_k);
    }
    pt.h_sun = h_sun_acc / sources_per_graph;
    out.push_back(pt);
  }
  return out;
}

}  // namespace fn
