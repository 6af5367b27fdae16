#include "isg/fp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "isg/rng.hpp"

namespace isg {

namespace {

SpanningTree mst_impl(const IsingModel& model, const std::vector<double>& scores, Rng& rng) {
  const int n = model.num_nodes();
  const int m = model.num_edges();
  if (static_cast<int>(scores.size()) != m)
    throw std::invalid_argument("max_spanning_tree: scores length != number of edges");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  // Shuffle each run of equal scores so ties are broken at random.
  std::size_t lo = 0;
  while (lo < order.size()) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) ++hi;
    if (hi - lo > 1) rng.shuffle_range(order, lo, hi);
    lo = hi;
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };

  SpanningTree tree;
  tree.edge_ids.reserve(n - 1);
  for (int k : order) {
    const Edge& e = model.edges()[k];
    int a = find(e.u), b = find(e.v);
    if (a == b) continue;
    parent[a] = b;
    tree.edge_ids.push_back(k);
    if (static_cast<int>(tree.edge_ids.size()) == n - 1) break;
  }
  if (static_cast<int>(tree.edge_ids.size()) != n - 1)
    throw std::invalid_argument("max_spanning_tree: graph is disconnected");
  return tree;
}

double lse2(double a, double b) {
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Max-product on the tree. For every node j and parent spin, the argmax
// set over x_j is kept exactly, together with the log-count of
// maximizers in j's subtree, so the downward pass samples uniformly
// over the full maximizer set.
Assignment tree_map_impl(const IsingModel& model, const SpanningTree& tree, Rng& rng) {
  validate_tree(model, tree);
  const int n = model.num_nodes();

  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge id)
  for (int k : tree.edge_ids) {
    const Edge& e = model.edges()[k];
    adj[e.u].push_back({e.v, k});
    adj[e.v].push_back({e.u, k});
  }

  std::vector<int> bfs{0};
  std::vector<int> parent(n, -1);
  std::vector<double> parent_w(n, 0.0);
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  for (std::size_t h = 0; h < bfs.size(); ++h) {
    int i = bfs[h];
    for (auto [j, k] : adj[i]) {
      if (seen[j]) continue;
      seen[j] = 1;
      parent[j] = i;
      parent_w[j] = model.edges()[k].w;
      bfs.push_back(j);
    }
  }

  // Per node, indexed by own spin s in {0,1} (0 = -1, 1 = +1):
  //   best[j][s]  max restricted potential of j's subtree given x_j
  //   lcount[j][s] log number of maximizing subtree assignments
  // and per parent spin sp: the message max and the argmax set over x_j.
  std::vector<std::array<double, 2>> best(n), lcount(n);
  std::vector<std::array<double, 2>> msg(n);          // to parent, by parent spin
  std::vector<std::array<std::array<bool, 2>, 2>> arg(n);  // [parent spin][x_j] in argmax

  auto spin_of = [](int s) { return s == 1 ? +1.0 : -1.0; };

  for (auto it = bfs.rbegin(); it != bfs.rend(); ++it) {
    int j = *it;
    for (int s = 0; s < 2; ++s) {
      double value = model.biases()[j] * spin_of(s);
      double lc = 0.0;
      for (auto [k, ke] : adj[j]) {
        if (k == parent[j]) continue;
        value += msg[k][s];
        double l0 = arg[k][s][0] ? lcount[k][0] : -std::numeric_limits<double>::infinity();
        double l1 = arg[k][s][1] ? lcount[k][1] : -std::numeric_limits<double>::infinity();
        lc += arg[k][s][0] && arg[k][s][1] ? lse2(l0, l1) : std::max(l0, l1);
      }
      best[j][s] = value;
      lcount[j][s] = lc;
    }
    if (parent[j] >= 0) {
      for (int sp = 0; sp < 2; ++sp) {
        double v0 = best[j][0] + parent_w[j] * spin_of(sp) * spin_of(0);
        double v1 = best[j][1] + parent_w[j] * spin_of(sp) * spin_of(1);
        msg[j][sp] = std::max(v0, v1);
        arg[j][sp][0] = v0 == msg[j][sp];
        arg[j][sp][1] = v1 == msg[j][sp];
      }
    }
  }

  Assignment x(n);
  auto sample_spin = [&](int j, bool in0, bool in1) {
    if (in0 && in1) {
      double l0 = lcount[j][0], l1 = lcount[j][1];
      double p1 = 1.0 / (1.0 + std::exp(l0 - l1));
      return rng.uniform() < p1 ? +1 : -1;
    }
    return in1 ? +1 : -1;
  };

  {  // root: argmax over x_0 of its subtree value
    double root_max = std::max(best[0][0], best[0][1]);
    x[0] = sample_spin(0, best[0][0] == root_max, best[0][1] == root_max);
  }
  for (std::size_t h = 1; h < bfs.size(); ++h) {
    int j = bfs[h];
    int sp = x[parent[j]] == 1 ? 1 : 0;
    x[j] = sample_spin(j, arg[j][sp][0], arg[j][sp][1]);
  }
  return x;
}

}  // namespace

SpanningTree max_spanning_tree(const IsingModel& model, const std::vector<double>& edge_scores,
                               std::uint64_t seed) {
  Rng rng = Rng(seed).stream("tree-ties");
  return mst_impl(model, edge_scores, rng);
}

Assignment tree_map(const IsingModel& model, const SpanningTree& tree, std::uint64_t seed) {
  Rng rng = Rng(seed).stream("map-ties");
  return tree_map_impl(model, tree, rng);
}

std::pair<Marginals, FpState> fp_run(const IsingModel& model, int m, FpVariant variant,
                                     std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("fp_run: m must be >= 1");
  if (!model.is_connected()) throw std::invalid_argument("fp_run: model graph is disconnected");

  const int n = model.num_nodes();
  const int num_edges = model.num_edges();

  Rng root(seed);
  Rng init_rng = root.stream("init");
  Rng tree_rng = root.stream("tree");
  Rng s_rng = root.stream("s");
  Rng map_rng = root.stream("map");

  FpState state;
  state.rounds = m;
  state.plus_counts.assign(n, 0);

  Assignment x(n);
  for (int& s : x) s = init_rng.spin();
  state.assignments.push_back(x);
  for (int i = 0; i < n; ++i)
    if (x[i] == 1) ++state.plus_counts[i];

  state.mu_hat.resize(num_edges);
  for (int k = 0; k < num_edges; ++k) {
    const Edge& e = model.edges()[k];
    state.mu_hat[k] = static_cast<double>(x[e.u] * x[e.v]);
  }

  std::vector<double> scores(num_edges);
  std::vector<char> in_tree(num_edges);
  for (int l = 1; l <= m; ++l) {
    for (int k = 0; k < num_edges; ++k) scores[k] = model.edges()[k].w * state.mu_hat[k];
    state.trees.push_back(mst_impl(model, scores, tree_rng));

    const int s = 1 + static_cast<int>(s_rng.uniform_int(static_cast<std::uint64_t>(l)));
    state.s_draws.push_back(s);
    const SpanningTree& chosen = state.trees[s - 1];

    x = tree_map_impl(model, chosen, map_rng);
    state.assignments.push_back(x);
    for (int i = 0; i < n; ++i)
      if (x[i] == 1) ++state.plus_counts[i];

    std::fill(in_tree.begin(), in_tree.end(), 0);
    for (int k : chosen.edge_ids) in_tree[k] = 1;
    for (int k = 0; k < num_edges; ++k) {
      const Edge& e = model.edges()[k];
      double v = static_cast<double>(x[e.u] * x[e.v]);
      if (variant == FpVariant::ce && !in_tree[k]) v = 0.0;
      state.mu_hat[k] = (l * state.mu_hat[k] + v) / (l + 1);
    }
  }

  Marginals marg;
  marg.converged = true;
  marg.iterations_used = m;
  marg.p_plus.resize(n);
  for (int i = 0; i < n; ++i)
    marg.p_plus[i] = static_cast<double>(state.plus_counts[i]) / (m + 1);
  return {std::move(marg), std::move(state)};
}

std::pair<double, double> fp_log_z_bound(const IsingModel& model, const FpState& state) {
  const int n = model.num_nodes();
  if (n > 25) throw std::invalid_argument("fp_log_z_bound: joint counts infeasible for n > 25");
  if (state.assignments.empty()) throw std::invalid_argument("fp_log_z_bound: empty state");

  // Empirical distribution of x^(1..m) (the assignments the tree player
  // responded to), matching the pairing of assignments with trees.
  const std::size_t m = state.assignments.size() - 1;
  const std::size_t count = m > 0 ? m : 1;

  std::unordered_map<std::uint64_t, long> joint;
  std::vector<double> pair_avg(model.num_edges(), 0.0);
  for (std::size_t l = 0; l < count; ++l) {
    const Assignment& x = state.assignments[l];
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i)
      if (x[i] == 1) key |= std::uint64_t{1} << i;
    ++joint[key];
    for (int k = 0; k < model.num_edges(); ++k) {
      const Edge& e = model.edges()[k];
      pair_avg[k] += static_cast<double>(x[e.u] * x[e.v]);
    }
  }

  double coupling = 0.0;
  for (int k = 0; k < model.num_edges(); ++k)
    coupling += model.edges()[k].w * pair_avg[k] / static_cast<double>(count);

  double ent = 0.0;
  for (const auto& [key, c] : joint) {
    double p = static_cast<double>(c) / static_cast<double>(count);
    ent -= p * std::log(p);
  }
  return {coupling, ent};
}

}  // namespace isg
