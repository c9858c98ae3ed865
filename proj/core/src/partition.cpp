#include "fn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "fn/rng.hpp"

namespace fn {

Matrix Partition::membership(int num_nodes) const {
  Matrix m(C, num_nodes);
  for (int b = 0; b < C; ++b)
    for (int v : blocks[static_cast<std::size_t>(b)]) m(b, v) = 1.0;
  return m;
}

void Partition::validate(const Graph& g) const {
  if (C <= 0) throw std::logic_error("partition: C must be positive");
  if (static_cast<int>(base_assignment.size()) != g.num_nodes)
    throw std::logic_error("partition: assignment size mismatch");
  if (static_cast<int>(blocks.size()) != C) throw std::logic_error("partition: block count mismatch");
  std::vector<std::int64_t> count(static_cast<std::size_t>(C), 0);
  for (int v = 0; v < g.num_nodes; ++v) {
    const int b = base_assignment[static_cast<std::size_t>(v)];
    if (b < 0 || b >= C) throw std::logic_error("partition: assignment out of range");
    count[static_cast<std::size_t>(b)]++;
  }
  for (int b = 0; b < C; ++b) {
    const auto& blk = blocks[static_cast<std::size_t>(b)];
    if (blk.empty() && C <= g.num_nodes) throw std::logic_error("partition: empty block");
    if (!std::is_sorted(blk.begin(), blk.end())) throw std::logic_error("partition: block unsorted");
    for (int v : blk)
      if (v < 0 || v >= g.num_nodes) throw std::logic_error("partition: block member out of range");
  }
  for (int v = 0; v < g.num_nodes; ++v) {
    const auto& blk = blocks[static_cast<std::size_t>(base_assignment[static_cast<std::size_t>(v)])];
    if (!std::binary_search(blk.begin(), blk.end(), v))
      throw std::logic_error("partition: expanded block does not contain its base node");
  }
}

namespace {

// Weighted multigraph used during coarsening. Node weights count the fine
// nodes each coarse node represents; edge weights count collapsed edges.
struct LevelGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, std::int64_t>>> adj;  // (neighbor, weight)
  std::vector<std::int64_t> node_weight;
};

LevelGraph level_from_graph(const Graph& g) {
  LevelGraph lg;
  lg.n = g.num_nodes;
  lg.adj.resize(static_cast<std::size_t>(g.num_nodes));
  lg.node_weight.assign(static_cast<std::size_t>(g.num_nodes), 1);
  for (int v = 0; v < g.num_nodes; ++v) {
    auto nb = g.neighbors_of(v);
    lg.adj[static_cast<std::size_t>(v)].reserve(nb.size());
    for (int u : nb) lg.adj[static_cast<std::size_t>(v)].emplace_back(u, 1);
  }
  return lg;
}

std::int64_t assignment_cut(const LevelGraph& lg, const std::vector<int>& part) {
  std::int64_t cut = 0;
  for (int v = 0; v < lg.n; ++v)
    for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)])
      if (part[static_cast<std::size_t>(v)] != part[static_cast<std::size_t>(u)]) cut += w;
  return cut / 2;
}

// One heavy-edge-matching coarsening step. Returns the coarse graph and the
// fine-to-coarse map, or nullopt when matching no longer shrinks the graph.
bool coarsen_step(const LevelGraph& lg, Rng& rng, LevelGraph& coarse, std::vector<int>& fine_to_coarse) {
  std::vector<int> order(static_cast<std::size_t>(lg.n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<int> match(static_cast<std::size_t>(lg.n), -1);
  int coarse_n = 0;
  fine_to_coarse.assign(static_cast<std::size_t>(lg.n), -1);
  for (int v : order) {
    if (match[static_cast<std::size_t>(v)] >= 0) continue;
    int best = -1;
    std::int64_t best_w = -1;
    for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
      if (u == v || match[static_cast<std::size_t>(u)] >= 0) continue;
      if (w > best_w) {
        best_w = w;
        best = u;
      }
    }
    if (best >= 0) {
      match[static_cast<std::size_t>(v)] = best;
      match[static_cast<std::size_t>(best)] = v;
      fine_to_coarse[static_cast<std::size_t>(v)] = coarse_n;
      fine_to_coarse[static_cast<std::size_t>(best)] = coarse_n;
      coarse_n++;
    } else {
      match[static_cast<std::size_t>(v)] = v;
      fine_to_coarse[static_cast<std::size_t>(v)] = coarse_n;
      coarse_n++;
    }
  }
  if (coarse_n >= static_cast<int>(std::ceil(0.95 * lg.n))) return false;

  coarse.n = coarse_n;
  coarse.adj.assign(static_cast<std::size_t>(coarse_n), {});
  coarse.node_weight.assign(static_cast<std::size_t>(coarse_n), 0);
  for (int v = 0; v < lg.n; ++v)
    coarse.node_weight[static_cast<std::size_t>(fine_to_coarse[static_cast<std::size_t>(v)])] += lg.node_weight[static_cast<std::size_t>(v)];
  std::vector<std::int64_t> row(static_cast<std::size_t>(coarse_n), 0);
  std::vector<int> touched;
  for (int cv = 0; cv < coarse_n; ++cv) coarse.adj[static_cast<std::size_t>(cv)].clear();
  // Accumulate merged edge weights per coarse node.
  std::vector<std::vector<int>> members(static_cast<std::size_t>(coarse_n));
  for (int v = 0; v < lg.n; ++v) members[static_cast<std::size_t>(fine_to_coarse[static_cast<std::size_t>(v)])].push_back(v);
  for (int cv = 0; cv < coarse_n; ++cv) {
    touched.clear();
    for (int v : members[static_cast<std::size_t>(cv)]) {
      for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
        const int cu = fine_to_coarse[static_cast<std::size_t>(u)];
        if (cu == cv) continue;  // internal edges vanish
        if (row[static_cast<std::size_t>(cu)] == 0) touched.push_back(cu);
        row[static_cast<std::size_t>(cu)] += w;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int cu : touched) {
      coarse.adj[static_cast<std::size_t>(cv)].emplace_back(cu, row[static_cast<std::size_t>(cu)]);
      row[static_cast<std::size_t>(cu)] = 0;
    }
  }
  return true;
}

// Greedy graph-growing initial C-way assignment on the coarsest level.
std::vector<int> initial_partition(const LevelGraph& lg, int C, std::int64_t allowed, Rng& rng) {
  (void)rng;
  std::vector<int> part(static_cast<std::size_t>(lg.n), -1);
  std::int64_t remaining_weight = std::accumulate(lg.node_weight.begin(), lg.node_weight.end(), std::int64_t{0});
  int unassigned = lg.n;

  auto pick_seed = [&]() {
    int best = -1;
    std::int64_t best_deg = -1;
    for (int v = 0; v < lg.n; ++v) {
      if (part[static_cast<std::size_t>(v)] >= 0) continue;
      std::int64_t deg = 0;
      for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)])
        if (part[static_cast<std::size_t>(u)] < 0) deg += w;
      if (best < 0 || deg < best_deg) {
        best = v;
        best_deg = deg;
      }
    }
    return best;  // peripheral: fewest unassigned-weighted links
  };

  for (int b = 0; b < C; ++b) {
    const int blocks_left = C - b;
    const std::int64_t target = (remaining_weight + blocks_left - 1) / blocks_left;
    std::int64_t weight = 0;
    std::deque<int> frontier;
    while (weight < target && unassigned > 0) {
      int v = -1;
      while (!frontier.empty()) {
        const int cand = frontier.front();
        frontier.pop_front();
        if (part[static_cast<std::size_t>(cand)] < 0) {
          v = cand;
          break;
        }
      }
      if (v < 0) {
        v = pick_seed();
        if (v < 0) break;
      }
      if (weight > 0 && weight + lg.node_weight[static_cast<std::size_t>(v)] > allowed) break;
      part[static_cast<std::size_t>(v)] = b;
      weight += lg.node_weight[static_cast<std::size_t>(v)];
      unassigned--;
      for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
        (void)w;
        if (part[static_cast<std::size_t>(u)] < 0) frontier.push_back(u);
      }
    }
    remaining_weight -= weight;
  }
  // Sweep leftovers (disconnected graphs or exhausted growth) into the
  // lightest blocks.
  std::vector<std::int64_t> weight(static_cast<std::size_t>(C), 0);
  for (int v = 0; v < lg.n; ++v)
    if (part[static_cast<std::size_t>(v)] >= 0) weight[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])] += lg.node_weight[static_cast<std::size_t>(v)];
  for (int v = 0; v < lg.n; ++v) {
    if (part[static_cast<std::size_t>(v)] >= 0) continue;
    const int b = static_cast<int>(std::min_element(weight.begin(), weight.end()) - weight.begin());
    part[static_cast<std::size_t>(v)] = b;
    weight[static_cast<std::size_t>(b)] += lg.node_weight[static_cast<std::size_t>(v)];
  }
  return part;
}

// Greedy boundary refinement: applies strictly positive-gain moves that keep
// the balance constraint, so the cut never increases within a pass.
void refine_level(const LevelGraph& lg, std::vector<int>& part, int C, std::int64_t allowed) {
  std::vector<std::int64_t> weight(static_cast<std::size_t>(C), 0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(C), 0);
  for (int v = 0; v < lg.n; ++v) {
    weight[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])] += lg.node_weight[static_cast<std::size_t>(v)];
    count[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])]++;
  }

  const std::int64_t cut_before = assignment_cut(lg, part);
  std::deque<int> queue;
  std::vector<char> queued(static_cast<std::size_t>(lg.n), 0);
  for (int v = 0; v < lg.n; ++v) {
    queue.push_back(v);
    queued[static_cast<std::size_t>(v)] = 1;
  }
  std::vector<std::int64_t> link(static_cast<std::size_t>(C), 0);
  std::vector<int> touched;
  std::int64_t moves = 0;
  const std::int64_t move_cap = 50LL * lg.n + 1000;
  while (!queue.empty() && moves < move_cap) {
    const int v = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(v)] = 0;
    const int own = part[static_cast<std::size_t>(v)];
    if (count[static_cast<std::size_t>(own)] <= 1) continue;  // never empty a block
    touched.clear();
    for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
      const int b = part[static_cast<std::size_t>(u)];
      if (link[static_cast<std::size_t>(b)] == 0) touched.push_back(b);
      link[static_cast<std::size_t>(b)] += w;
    }
    std::int64_t best_gain = 0;
    int best_b = -1;
    for (int b : touched) {
      if (b == own) continue;
      if (weight[static_cast<std::size_t>(b)] + lg.node_weight[static_cast<std::size_t>(v)] > allowed) continue;
      const std::int64_t gain = link[static_cast<std::size_t>(b)] - link[static_cast<std::size_t>(own)];
      if (gain > best_gain || (gain == best_gain && best_b >= 0 && weight[static_cast<std::size_t>(b)] < weight[static_cast<std::size_t>(best_b)])) {
        if (gain > 0) {
          best_gain = gain;
          best_b = b;
        }
      }
    }
    for (int b : touched) link[static_cast<std::size_t>(b)] = 0;
    if (best_b >= 0) {
      part[static_cast<std::size_t>(v)] = best_b;
      weight[static_cast<std::size_t>(own)] -= lg.node_weight[static_cast<std::size_t>(v)];
      weight[static_cast<std::size_t>(best_b)] += lg.node_weight[static_cast<std::size_t>(v)];
      count[static_cast<std::size_t>(own)]--;
      count[static_cast<std::size_t>(best_b)]++;
      moves++;
      for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
        (void)w;
        if (!queued[static_cast<std::size_t>(u)]) {
          queue.push_back(u);
          queued[static_cast<std::size_t>(u)] = 1;
        }
      }
    }
  }
  const std::int64_t cut_after = assignment_cut(lg, part);
  if (cut_after > cut_before)
    throw std::logic_error("partition: refinement pass increased the edge cut");
}

// Moves nodes out of overweight blocks (least cut damage first) until the
// balance constraint holds; also repopulates empty blocks.
void rebalance_level(const LevelGraph& lg, std::vector<int>& part, int C, std::int64_t allowed) {
  std::vector<std::int64_t> weight(static_cast<std::size_t>(C), 0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(C), 0);
  for (int v = 0; v < lg.n; ++v) {
    weight[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])] += lg.node_weight[static_cast<std::size_t>(v)];
    count[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])]++;
  }
  std::vector<std::int64_t> link(static_cast<std::size_t>(C), 0);
  std::vector<int> touched;

  auto move_one = [&](int from, int to_hint) {
    // Choose the block-`from` node whose move damages the cut least.
    int best_v = -1, best_to = -1;
    std::int64_t best_score = 0;
    for (int v = 0; v < lg.n; ++v) {
      if (part[static_cast<std::size_t>(v)] != from) continue;
      touched.clear();
      for (const auto& [u, w] : lg.adj[static_cast<std::size_t>(v)]) {
        const int b = part[static_cast<std::size_t>(u)];
        if (link[static_cast<std::size_t>(b)] == 0) touched.push_back(b);
        link[static_cast<std::size_t>(b)] += w;
      }
      const std::int64_t own_link = link[static_cast<std::size_t>(from)];
      int to = to_hint;
      if (to < 0) {
        std::int64_t best_link = -1;
        for (int b = 0; b < C; ++b) {
          if (b == from) continue;
          if (weight[static_cast<std::size_t>(b)] + lg.node_weight[static_cast<std::size_t>(v)] > allowed) continue;
          if (link[static_cast<std::size_t>(b)] > best_link) {
            best_link = link[static_cast<std::size_t>(b)];
            to = b;
          }
        }
      }
      if (to >= 0) {
        const std::int64_t score = link[static_cast<std::size_t>(to)] - own_link;
        if (best_v < 0 || score > best_score) {
          best_v = v;
          best_to = to;
          best_score = score;
        }
      }
      for (int b : touched) link[static_cast<std::size_t>(b)] = 0;
      touched.clear();
    }
    if (best_v < 0) return false;
    weight[static_cast<std::size_t>(from)] -= lg.node_weight[static_cast<std::size_t>(best_v)];
    weight[static_cast<std::size_t>(best_to)] += lg.node_weight[static_cast<std::size_t>(best_v)];
    count[static_cast<std::size_t>(from)]--;
    count[static_cast<std::size_t>(best_to)]++;
    part[static_cast<std::size_t>(best_v)] = best_to;
    return true;
  };

  // Fill empty blocks first (only possible at the finest level, where C <= n).
  for (int b = 0; b < C; ++b) {
    while (count[static_cast<std::size_t>(b)] == 0) {
      const int heaviest = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
      if (count[static_cast<std::size_t>(heaviest)] <= 1) break;
      if (!move_one(heaviest, b)) break;
    }
  }
  for (int iter = 0; iter < lg.n + C; ++iter) {
    int over = -1;
    for (int b = 0; b < C; ++b)
      if (weight[static_cast<std::size_t>(b)] > allowed && count[static_cast<std::size_t>(b)] > 1) over = b;
    if (over < 0) break;
    if (!move_one(over, -1)) break;
  }
}

Partition finalize_partition(const Graph& g, std::vector<int> assignment, int C) {
  Partition p;
  p.C = C;
  p.k_hop = 0;
  p.base_assignment = std::move(assignment);
  p.blocks.assign(static_cast<std::size_t>(C), {});
  for (int v = 0; v < g.num_nodes; ++v)
    p.blocks[static_cast<std::size_t>(p.base_assignment[static_cast<std::size_t>(v)])].push_back(v);
  return p;
}

void check_c(const Graph& g, int C) {
  if (C <= 0) throw std::invalid_argument("partition: C must be positive");
  if (C > g.num_nodes) throw std::invalid_argument("partition: C exceeds node count");
}

}  // namespace

Partition partition_multilevel(const Graph& g, int C, double balance_eps, std::uint64_t seed) {
  check_c(g, C);
  Rng rng = Rng(seed).stream("multilevel");
  const std::int64_t allowed = static_cast<std::int64_t>(
      std::floor((1.0 + balance_eps) * std::ceil(static_cast<double>(g.num_nodes) / C)));

  if (C == 1) return finalize_partition(g, std::vector<int>(static_cast<std::size_t>(g.num_nodes), 0), 1);

  // Coarsening phase.
  std::vector<LevelGraph> levels;
  std::vector<std::vector<int>> maps;  // maps[i]: level i node -> level i+1 node
  levels.push_back(level_from_graph(g));
  const int coarse_target = std::max(4 * C, 64);
  while (levels.back().n > coarse_target) {
    LevelGraph coarse;
    std::vector<int> f2c;
    if (!coarsen_step(levels.back(), rng, coarse, f2c)) break;
    maps.push_back(std::move(f2c));
    levels.push_back(std::move(coarse));
  }

  // Initial partition on the coarsest level, then uncoarsen with refinement.
  std::vector<int> part = initial_partition(levels.back(), C, allowed, rng);
  rebalance_level(levels.back(), part, C, allowed);
  refine_level(levels.back(), part, C, allowed);
  for (int lvl = static_cast<int>(levels.size()) - 2; lvl >= 0; --lvl) {
    std::vector<int> finer(static_cast<std::size_t>(levels[static_cast<std::size_t>(lvl)].n));
    for (int v = 0; v < levels[static_cast<std::size_t>(lvl)].n; ++v)
      finer[static_cast<std::size_t>(v)] = part[static_cast<std::size_t>(maps[static_cast<std::size_t>(lvl)][static_cast<std::size_t>(v)])];
    part = std::move(finer);
    rebalance_level(levels[static_cast<std::size_t>(lvl)], part, C, allowed);
    refine_level(levels[static_cast<std::size_t>(lvl)], part, C, allowed);
  }
  rebalance_level(levels.front(), part, C, allowed);

  Partition p = finalize_partition(g, std::move(part), C);
  p.validate(g);
  return p;
}

Partition partition_random(const Graph& g, int C, std::uint64_t seed) {
  check_c(g, C);
  Rng rng = Rng(seed).stream("random_partition");
  std::vector<int> part(static_cast<std::size_t>(g.num_nodes));
  for (auto& b : part) b = static_cast<int>(rng.uniform_int(C));
  std::vector<std::int64_t> count(static_cast<std::size_t>(C), 0);
  for (int b : part) count[static_cast<std::size_t>(b)]++;
  for (int b = 0; b < C; ++b) {
    while (count[static_cast<std::size_t>(b)] == 0) {
      const int donor = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
      // Take the highest-id node of the donor block.
      for (int v = g.num_nodes - 1; v >= 0; --v) {
        if (part[static_cast<std::size_t>(v)] == donor) {
          part[static_cast<std::size_t>(v)] = b;
          count[static_cast<std::size_t>(donor)]--;
          count[static_cast<std::size_t>(b)]++;
          break;
        }
      }
    }
  }
  Partition p = finalize_partition(g, std::move(part), C);
  p.validate(g);
  return p;
}

Partition partition_bfs(const Graph& g, int C, std::uint64_t seed) {
  check_c(g, C);
  Rng rng = Rng(seed).stream("bfs_partition");
  const int n = g.num_nodes;

  // Farthest-point seed spreading.
  std::vector<int> seeds;
  seeds.push_back(static_cast<int>(rng.uniform_int(n)));
  std::vector<int> nearest(static_cast<std::size_t>(n), std::numeric_limits<int>::max());
  auto absorb = [&](int s) {
    const auto lv = bfs_levels(g, s);
    for (int v = 0; v < n; ++v)
      if (lv[static_cast<std::size_t>(v)] >= 0)
        nearest[static_cast<std::size_t>(v)] = std::min(nearest[static_cast<std::size_t>(v)], lv[static_cast<std::size_t>(v)]);
  };
  absorb(seeds[0]);
  while (static_cast<int>(seeds.size()) < C) {
    int best = -1, best_d = -1;
    for (int v = 0; v < n; ++v) {
      const bool taken = std::find(seeds.begin(), seeds.end(), v) != seeds.end();
      if (taken) continue;
      const int d = nearest[static_cast<std::size_t>(v)] == std::numeric_limits<int>::max()
                        ? std::numeric_limits<int>::max()
                        : nearest[static_cast<std::size_t>(v)];
      if (d > best_d) {
        best_d = d;
        best = v;
      }
    }
    seeds.push_back(best);
    absorb(best);
  }

  std::vector<int> part(static_cast<std::size_t>(n), -1);
  std::vector<std::deque<int>> frontier(static_cast<std::size_t>(C));
  std::vector<std::int64_t> size(static_cast<std::size_t>(C), 0);
  for (int b = 0; b < C; ++b) {
    part[static_cast<std::size_t>(seeds[static_cast<std::size_t>(b)])] = b;
    size[static_cast<std::size_t>(b)] = 1;
    for (int u : g.neighbors_of(seeds[static_cast<std::size_t>(b)])) frontier[static_cast<std::size_t>(b)].push_back(u);
  }
  int assigned = C;
  while (assigned < n) {
    // Smallest region with a live frontier claims next.
    int b = -1;
    for (int c = 0; c < C; ++c) {
      if (frontier[static_cast<std::size_t>(c)].empty()) continue;
      if (b < 0 || size[static_cast<std::size_t>(c)] < size[static_cast<std::size_t>(b)]) b = c;
    }
    if (b < 0) {
      // Disconnected remainder: smallest region adopts the next free node.
      b = static_cast<int>(std::min_element(size.begin(), size.end()) - size.begin());
      for (int v = 0; v < n; ++v) {
        if (part[static_cast<std::size_t>(v)] < 0) {
          part[static_cast<std::size_t>(v)] = b;
          size[static_cast<std::size_t>(b)]++;
          assigned++;
          for (int u : g.neighbors_of(v)) frontier[static_cast<std::size_t>(b)].push_back(u);
          break;
        }
      }
      continue;
    }
    int v = -1;
    while (!frontier[static_cast<std::size_t>(b)].empty()) {
      const int cand = frontier[static_cast<std::size_t>(b)].front();
      frontier[static_cast<std::size_t>(b)].pop_front();
      if (part[static_cast<std::size_t>(cand)] < 0) {
        v = cand;
        break;
      }
    }
    if (v < 0) continue;
    part[static_cast<std::size_t>(v)] = b;
    size[static_cast<std::size_t>(b)]++;
    assigned++;
    for (int u : g.neighbors_of(v))
      if (part[static_cast<std::size_t>(u)] < 0) frontier[static_cast<std::size_t>(b)].push_back(u);
  }
  Partition p = finalize_partition(g, std::move(part), C);
  p.validate(g);
  return p;
}

double modularity(const Graph& g, const std::vector<int>& assignment) {
  const double m = static_cast<double>(g.num_edges());
  if (m == 0) return 0.0;
  const int C = *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<double> inside(static_cast<std::size_t>(C), 0.0), total(static_cast<std::size_t>(C), 0.0);
  for (int v = 0; v < g.num_nodes; ++v) {
    total[static_cast<std::size_t>(assignment[static_cast<std::size_t>(v)])] += g.degree(v);
    for (int u : g.neighbors_of(v))
      if (assignment[static_cast<std::size_t>(v)] == assignment[static_cast<std::size_t>(u)])
        inside[static_cast<std::size_t>(assignment[static_cast<std::size_t>(v)])] += 1.0;  // counts each internal edge twice
  }
  double q = 0.0;
  for (int c = 0; c < C; ++c)
    q += inside[static_cast<std::size_t>(c)] / (2.0 * m) -
         (total[static_cast<std::size_t>(c)] / (2.0 * m)) * (total[static_cast<std::size_t>(c)] / (2.0 * m));
  return q;
}

namespace {

// One Louvain aggregation round over a weighted graph with self-loops.
struct WeightedGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
  std::vector<double> self_loop;                         // doubled weight convention
  std::vector<double> strength;                          // weighted degree incl. loops
  double two_m = 0.0;
};

bool louvain_local_moving(const WeightedGraph& wg, std::vector<int>& comm, Rng& rng) {
  std::vector<double> comm_total(static_cast<std::size_t>(wg.n), 0.0);
  for (int v = 0; v < wg.n; ++v) comm_total[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] += wg.strength[static_cast<std::size_t>(v)];
  std::vector<int> order(static_cast<std::size_t>(wg.n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  bool any_move = false;
  bool improved = true;
  std::vector<double> link(static_cast<std::size_t>(wg.n), 0.0);
  std::vector<int> touched;
  int sweeps = 0;
  while (improved && sweeps < 100) {
    improved = false;
    sweeps++;
    for (int v : order) {
      const int own = comm[static_cast<std::size_t>(v)];
      touched.clear();
      for (const auto& [u, w] : wg.adj[static_cast<std::size_t>(v)]) {
        const int c = comm[static_cast<std::size_t>(u)];
        if (link[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
        link[static_cast<std::size_t>(c)] += w;
      }
      comm_total[static_cast<std::size_t>(own)] -= wg.strength[static_cast<std::size_t>(v)];
      double best_gain = link[static_cast<std::size_t>(own)] -
                         comm_total[static_cast<std::size_t>(own)] * wg.strength[static_cast<std::size_t>(v)] / wg.two_m;
      int best_c = own;
      for (int c : touched) {
        if (c == own) continue;
        const double gain = link[static_cast<std::size_t>(c)] -
                            comm_total[static_cast<std::size_t>(c)] * wg.strength[static_cast<std::size_t>(v)] / wg.two_m;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_c = c;
        }
      }
      comm[static_cast<std::size_t>(v)] = best_c;
      comm_total[static_cast<std::size_t>(best_c)] += wg.strength[static_cast<std::size_t>(v)];
      if (best_c != own) {
        improved = true;
        any_move = true;
      }
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
    }
  }
  return any_move;
}

}  // namespace

Partition partition_louvain(const Graph& g, int C_target, std::uint64_t seed) {
  check_c(g, C_target);
  Rng rng = Rng(seed).stream("louvain");

  WeightedGraph wg;
  wg.n = g.num_nodes;
  wg.adj.resize(static_cast<std::size_t>(wg.n));
  wg.self_loop.assign(static_cast<std::size_t>(wg.n), 0.0);
  wg.strength.assign(static_cast<std::size_t>(wg.n), 0.0);
  for (int v = 0; v < g.num_nodes; ++v) {
    for (int u : g.neighbors_of(v)) wg.adj[static_cast<std::size_t>(v)].emplace_back(u, 1.0);
    wg.strength[static_cast<std::size_t>(v)] = g.degree(v);
    wg.two_m += g.degree(v);
  }
  if (wg.two_m == 0.0) wg.two_m = 1.0;  // edgeless graph: gains vanish anyway

  std::vector<int> node_to_comm(static_cast<std::size_t>(g.num_nodes));
  std::iota(node_to_comm.begin(), node_to_comm.end(), 0);

  for (int round = 0; round < 50; ++round) {
    std::vector<int> comm(static_cast<std::size_t>(wg.n));
    std::iota(comm.begin(), comm.end(), 0);
    const bool moved = louvain_local_moving(wg, comm, rng);

    // Compact community ids.
    std::vector<int> remap(static_cast<std::size_t>(wg.n), -1);
    int n_comm = 0;
    for (int v = 0; v < wg.n; ++v) {
      int& r = remap[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])];
      if (r < 0) r = n_comm++;
      comm[static_cast<std::size_t>(v)] = r;
    }
    for (auto& c : node_to_comm) c = comm[static_cast<std::size_t>(c)];
    if (!moved || n_comm == wg.n) break;

    // Aggregate.
    WeightedGraph next;
    next.n = n_comm;
    next.adj.resize(static_cast<std::size_t>(n_comm));
    next.self_loop.assign(static_cast<std::size_t>(n_comm), 0.0);
    next.strength.assign(static_cast<std::size_t>(n_comm), 0.0);
    next.two_m = wg.two_m;
    std::vector<double> row(static_cast<std::size_t>(n_comm), 0.0);
    std::vector<std::vector<int>> members(static_cast<std::size_t>(n_comm));
    for (int v = 0; v < wg.n; ++v) members[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])].push_back(v);
    for (int c = 0; c < n_comm; ++c) {
      std::vector<int> touched;
      double self_w = 0.0;
      for (int v : members[static_cast<std::size_t>(c)]) {
        self_w += wg.self_loop[static_cast<std::size_t>(v)];
        for (const auto& [u, w] : wg.adj[static_cast<std::size_t>(v)]) {
          const int cu = comm[static_cast<std::size_t>(u)];
          if (cu == c) {
            self_w += w;
            continue;
          }
          if (row[static_cast<std::size_t>(cu)] == 0.0) touched.push_back(cu);
          row[static_cast<std::size_t>(cu)] += w;
        }
      }
      std::sort(touched.begin(), touched.end());
      for (int cu : touched) {
        next.adj[static_cast<std::size_t>(c)].emplace_back(cu, row[static_cast<std::size_t>(cu)]);
        row[static_cast<std::size_t>(cu)] = 0.0;
      }
      next.self_loop[static_cast<std::size_t>(c)] = self_w;
      next.strength[static_cast<std::size_t>(c)] = self_w;
      for (const auto& [cu, w] : next.adj[static_cast<std::size_t>(c)]) {
        (void)cu;
        next.strength[static_cast<std::size_t>(c)] += w;
      }
    }
    wg = std::move(next);
  }

  // Compact final communities.
  std::vector<int> remap(node_to_comm.size(), -1);
  int n_comm = 0;
  for (auto& c : node_to_comm) {
    if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = n_comm++;
    c = remap[static_cast<std::size_t>(c)];
  }

  // Merge smallest-first or BFS-split toward exactly C_target communities.
  std::vector<std::vector<int>> comms(static_cast<std::size_t>(n_comm));
  for (int v = 0; v < g.num_nodes; ++v) comms[static_cast<std::size_t>(node_to_comm[static_cast<std::size_t>(v)])].push_back(v);

  while (static_cast<int>(comms.size()) > C_target) {
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < comms.size(); ++i)
      if (comms[i].size() < comms[smallest].size()) smallest = i;
    // Prefer the smallest adjacent community as merge partner.
    std::vector<char> in_small(static_cast<std::size_t>(g.num_nodes), 0);
    for (int v : comms[smallest]) in_small[static_cast<std::size_t>(v)] = 1;
    std::size_t partner = comms.size();
    for (std::size_t i = 0; i < comms.size(); ++i) {
      if (i == smallest) continue;
      bool adjacent = false;
      for (int v : comms[i]) {
        for (int u : g.neighbors_of(v))
          if (in_small[static_cast<std::size_t>(u)]) {
            adjacent = true;
            break;
          }
        if (adjacent) break;
      }
      if (adjacent && (partner == comms.size() || comms[i].size() < comms[partner].size())) partner = i;
    }
    if (partner == comms.size()) {
      for (std::size_t i = 0; i < comms.size(); ++i) {
        if (i == smallest) continue;
        if (partner == comms.size() || comms[i].size() < comms[partner].size()) partner = i;
      }
    }
    auto merged = comms[smallest];
    merged.insert(merged.end(), comms[partner].begin(), comms[partner].end());
    const std::size_t hi = std::max(smallest, partner), lo = std::min(smallest, partner);
    comms.erase(comms.begin() + static_cast<std::ptrdiff_t>(hi));
    comms[lo] = std::move(merged);
  }
  while (static_cast<int>(comms.size()) < C_target) {
    std::size_t largest = 0;
    for (std::size_t i = 1; i < comms.size(); ++i)
      if (comms[i].size() > comms[largest].size()) largest = i;
    auto& big = comms[largest];
    std::sort(big.begin(), big.end());
    const Graph sub = induced_subgraph(g, big);
    int start = 0;
    for (int v = 0; v < sub.num_nodes; ++v)
      if (sub.degree(v) < sub.degree(start)) start = v;
    const std::size_t half = big.size() / 2;
    std::vector<char> taken(static_cast<std::size_t>(sub.num_nodes), 0);
    std::vector<int> split;
    std::queue<int> q;
    q.push(start);
    taken[static_cast<std::size_t>(start)] = 1;
    while (!q.empty() && split.size() < half) {
      const int v = q.front();
      q.pop();
      split.push_back(big[static_cast<std::size_t>(v)]);
      for (int u : sub.neighbors_of(v)) {
        if (!taken[static_cast<std::size_t>(u)]) {
          taken[static_cast<std::size_t>(u)] = 1;
          q.push(u);
        }
      }
    }
    // Pad from untouched nodes when the community is internally disconnected.
    for (int v = 0; v < sub.num_nodes && split.size() < half; ++v) {
      if (!taken[static_cast<std::size_t>(v)]) {
        taken[static_cast<std::size_t>(v)] = 1;
        split.push_back(big[static_cast<std::size_t>(v)]);
      }
    }
    std::vector<char> moved(static_cast<std::size_t>(g.num_nodes), 0);
    for (int v : split) moved[static_cast<std::size_t>(v)] = 1;
    std::vector<int> rest;
    for (int v : big)
      if (!moved[static_cast<std::size_t>(v)]) rest.push_back(v);
    comms[largest] = std::move(rest);
    comms.push_back(std::move(split));
  }

  std::vector<int> part(static_cast<std::size_t>(g.num_nodes), -1);
  for (std::size_t c = 0; c < comms.size(); ++c)
    for (int v : comms[c]) part[static_cast<std::size_t>(v)] = static_cast<int>(c);
  Partition p = finalize_partition(g, std::move(part), C_target);
  p.validate(g);
  return p;
}

Partition expand_k_hop(const Graph& g, const Partition& p, int k) {
  if (k < 0) throw std::invalid_argument("expand_k_hop: k must be >= 0");
  Partition out;
  out.C = p.C;
  out.k_hop = k;
  out.base_assignment = p.base_assignment;
  out.blocks.assign(static_cast<std::size_t>(p.C), {});
  std::vector<int> dist(static_cast<std::size_t>(g.num_nodes));
  for (int b = 0; b < p.C; ++b) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    for (int v = 0; v < g.num_nodes; ++v) {
      if (p.base_assignment[static_cast<std::size_t>(v)] == b) {
        dist[static_cast<std::size_t>(v)] = 0;
        q.push(v);
      }
    }
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      if (dist[static_cast<std::size_t>(v)] >= k) continue;
      for (int u : g.neighbors_of(v)) {
        if (dist[static_cast<std::size_t>(u)] < 0) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          q.push(u);
        }
      }
    }
    auto& blk = out.blocks[static_cast<std::size_t>(b)];
    for (int v = 0; v < g.num_nodes; ++v)
      if (dist[static_cast<std::size_t>(v)] >= 0) blk.push_back(v);
  }
  out.validate(g);
  return out;
}

std::int64_t edge_cut(const Graph& g, const Partition& p) {
  std::int64_t cut = 0;
  for (int v = 0; v < g.num_nodes; ++v)
    for (int u : g.neighbors_of(v))
      if (v < u && p.base_assignment[static_cast<std::size_t>(v)] != p.base_assignment[static_cast<std::size_t>(u)]) cut++;
  return cut;
}

Matrix coarsened_adjacency(const Graph& g, const Partition& p, CoarseMode mode) {
  Matrix a(p.C, p.C);
  if (mode == CoarseMode::EdgeCount) {
    for (int v = 0; v < g.num_nodes; ++v) {
      const int bv = p.base_assignment[static_cast<std::size_t>(v)];
      for (int u : g.neighbors_of(v)) a(bv, p.base_assignment[static_cast<std::size_t>(u)]) += 1.0;
    }
  } else {
    for (int i = 0; i < p.C; ++i) {
      for (int j = 0; j < p.C; ++j) {
        const auto& bi = p.blocks[static_cast<std::size_t>(i)];
        const auto& bj = p.blocks[static_cast<std::size_t>(j)];
        std::size_t x = 0, y = 0;
        double shared = 0.0;
        while (x < bi.size() && y < bj.size()) {
          if (bi[x] == bj[y]) {
            shared += 1.0;
            ++x;
            ++y;
          } else if (bi[x] < bj[y]) {
            ++x;
          } else {
            ++y;
          }
        }
        a(i, j) = shared;
      }
    }
  }
  return a;
}

}  // namespace fn
