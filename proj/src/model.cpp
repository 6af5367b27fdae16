#include "isg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include "isg/rng.hpp"

namespace isg {

std::string class_name(const ModelClass& c) {
  if (std::holds_alternative<MixedClass>(c)) return "mixed";
  if (std::holds_alternative<AttractiveClass>(c)) return "attractive";
  return "sign";
}

IsingModel::IsingModel(int n, std::vector<Edge> edges, std::vector<double> biases,
                       std::optional<int> grid_d, ModelMeta meta)
    : n_(n),
      edges_(std::move(edges)),
      biases_(std::move(biases)),
      grid_d_(grid_d),
      meta_(std::move(meta)) {
  if (n_ <= 0) throw std::invalid_argument("IsingModel: n must be positive");
  if (static_cast<int>(biases_.size()) != n_)
    throw std::invalid_argument("IsingModel: biases length != n");

  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_)
      throw std::invalid_argument("IsingModel: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("IsingModel: self-loop");
    if (e.u > e.v) throw std::invalid_argument("IsingModel: edges must have u < v");
    if (!seen.insert({e.u, e.v}).second)
      throw std::invalid_argument("IsingModel: duplicate edge");
  }

  if (grid_d_) {
    int d = *grid_d_;
    if (d < 2 || n_ != d * d)
      throw std::invalid_argument("IsingModel: grid tag inconsistent with n");
    std::set<std::pair<int, int>> want;
    for (const Edge& e : build_grid(d)) want.insert({e.u, e.v});
    if (seen != want)
      throw std::invalid_argument("IsingModel: grid tag but edge set is not the planar grid");
  }

  adj_.assign(n_, {});
  for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
    adj_[edges_[k].u].push_back({edges_[k].v, k});
    adj_[edges_[k].v].push_back({edges_[k].u, k});
  }
  range_.assign(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double r = std::abs(biases_[i]);
    for (auto [j, k] : adj_[i]) r += std::abs(edges_[k].w);
    range_[i] = r;
  }
}

bool IsingModel::is_connected() const {
  std::vector<char> seen(n_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (auto [j, k] : adj_[i]) {
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == n_;
}

std::vector<Edge> build_grid(int d) {
  if (d < 2) throw std::invalid_argument("build_grid: d must be >= 2");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(2 * d * (d - 1)));
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      int u = r * d + c;
      if (c + 1 < d) edges.push_back({u, u + 1, 0.0});
      if (r + 1 < d) edges.push_back({u, u + d, 0.0});
    }
  }
  return edges;
}

void validate_assignment(const IsingModel& model, const Assignment& x) {
  if (static_cast<int>(x.size()) != model.num_nodes())
    throw std::invalid_argument("assignment length != n");
  for (int s : x)
    if (s != -1 && s != 1) throw std::invalid_argument("assignment entries must be -1 or +1");
}

double potential(const IsingModel& model, const Assignment& x) {
  validate_assignment(model, x);
  double v = 0.0;
  const auto& b = model.biases();
  for (int i = 0; i < model.num_nodes(); ++i) v += b[i] * x[i];
  for (const Edge& e : model.edges()) v += e.w * x[e.u] * x[e.v];
  return v;
}

void validate_tree(const IsingModel& model, const SpanningTree& tree) {
  int n = model.num_nodes();
  if (static_cast<int>(tree.edge_ids.size()) != n - 1)
    throw std::invalid_argument("spanning tree must have n-1 edges");
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int k : tree.edge_ids) {
    if (k < 0 || k >= model.num_edges())
      throw std::invalid_argument("spanning tree edge index out of range");
    const Edge& e = model.edges()[k];
    int a = find(e.u), b = find(e.v);
    if (a == b) throw std::invalid_argument("spanning tree contains a cycle");
    parent[a] = b;
  }
}

double restricted_potential(const IsingModel& model, const Assignment& x,
                            const SpanningTree& tree) {
  validate_assignment(model, x);
  validate_tree(model, tree);
  double v = 0.0;
  const auto& b = model.biases();
  for (int i = 0; i < model.num_nodes(); ++i) v += b[i] * x[i];
  for (int k : tree.edge_ids) {
    const Edge& e = model.edges()[k];
    v += e.w * x[e.u] * x[e.v];
  }
  return v;
}

double local_payoff(const IsingModel& model, int i, const Assignment& x) {
  validate_assignment(model, x);
  if (i < 0 || i >= model.num_nodes()) throw std::invalid_argument("node out of range");
  double field = model.biases()[i];
  for (auto [j, k] : model.neighbors(i)) field += model.edges()[k].w * x[j];
  return x[i] * field;
}

IsingModel generate_model(int d, const ModelClass& cls, std::uint64_t seed) {
  std::visit(
      [](const auto& c) {
        if (!(c.w > 0)) throw std::invalid_argument("model class needs w > 0");
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, SignProbClass>) {
          if (c.q < 0.0 || c.q > 1.0) throw std::invalid_argument("sign probability q must be in [0,1]");
        }
      },
      cls);

  std::vector<Edge> edges = build_grid(d);
  Rng root(seed);
  Rng wrng = root.stream("weights");
  Rng brng = root.stream("biases");

  for (Edge& e : edges) {
    if (const auto* m = std::get_if<MixedClass>(&cls)) {
      e.w = wrng.uniform(-m->w, m->w);
    } else if (const auto* a = std::get_if<AttractiveClass>(&cls)) {
      e.w = wrng.uniform(0.0, a->w);
    } else {
      const auto& s = std::get<SignProbClass>(cls);
      e.w = (wrng.bernoulli(s.q) ? +1.0 : -1.0) * s.w;
    }
  }

  std::vector<double> biases(static_cast<std::size_t>(d) * d);
  for (double& b : biases) b = brng.uniform(-1.0, 1.0);

  ModelMeta meta;
  meta.model_class = class_name(cls);
  std::visit([&](const auto& c) { meta.w = c.w; }, cls);
  if (const auto* s = std::get_if<SignProbClass>(&cls)) meta.q = s->q;
  meta.seed = seed;

  return IsingModel(d * d, std::move(edges), std::move(biases), d, std::move(meta));
}

}  // namespace isg
