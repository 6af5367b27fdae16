#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace isg {

struct Edge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

// Spin assignment, entries in {-1, +1}.
using Assignment = std::vector<int>;

// Edge-index subset of a model's edge list forming a maximal spanning tree.
struct SpanningTree {
  std::vector<int> edge_ids;
};

// Random-model classes for the synthetic experiments.
struct MixedClass {
  double w;  // w_ij ~ Uniform([-w, w])
};
struct AttractiveClass {
  double w;  // w_ij ~ Uniform([0, w])
};
struct SignProbClass {
  double w;  // |w_ij| = w, sign positive with probability q
  double q;
};
using ModelClass = std::variant<MixedClass, AttractiveClass, SignProbClass>;

std::string class_name(const ModelClass& c);

// Provenance carried along in model files; not used by any algorithm.
struct ModelMeta {
  std::string model_class;
  double w = 0.0;
  double q = 0.0;
  std::uint64_t seed = 0;
};

// Binary pairwise MRF over spins x in {-1,+1}^n with
//   P(x) proportional to exp( sum_i b_i x_i + sum_(i,j) w_ij x_i x_j ).
//
// Immutable after construction and safe to share across threads.
class IsingModel {
 public:
  // Edges must satisfy u < v, endpoints in [0, n), no duplicates. If
  // grid_d is set, the edge set must be exactly the d x d planar grid.
  IsingModel(int n, std::vector<Edge> edges, std::vector<double> biases,
             std::optional<int> grid_d = std::nullopt, ModelMeta meta = {});

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& biases() const { return biases_; }
  std::optional<int> grid_dim() const { return grid_d_; }
  const ModelMeta& meta() const { return meta_; }

  // Incident (neighbor node, edge index) pairs for node i.
  const std::vector<std::pair<int, int>>& neighbors(int i) const { return adj_[i]; }

  // R_i = |b_i| + sum_j |w_ij|; local payoffs lie in [-R_i, +R_i].
  double payoff_range(int i) const { return range_[i]; }

  bool is_connected() const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<double> biases_;
  std::optional<int> grid_d_;
  ModelMeta meta_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<double> range_;
};

// Edges of a d x d planar grid (no wrap-around), canonical order:
// nodes row-major, horizontal edge before vertical edge at each node.
// Weights are zero. d >= 2.
std::vector<Edge> build_grid(int d);

// Psi(x) = sum_i b_i x_i + sum_(i,j) w_ij x_i x_j.
double potential(const IsingModel& model, const Assignment& x);

// Same as potential() but keeping only the edges of `tree` (all biases kept).
double restricted_potential(const IsingModel& model, const Assignment& x,
                            const SpanningTree& tree);

// Player i's payoff in the induced game: x_i (b_i + sum_j w_ij x_j).
// Flip differences of this equal flip differences of the potential.
double local_payoff(const IsingModel& model, int i, const Assignment& x);

// Throws std::invalid_argument unless `tree` is a maximal spanning tree
// of the model graph (n-1 edges, connected, acyclic).
void validate_tree(const IsingModel& model, const SpanningTree& tree);

void validate_assignment(const IsingModel& model, const Assignment& x);

// Random d x d grid model. Weight and bias draws come from separate
// sub-streams of `seed`, so they are independent and reproducible.
IsingModel generate_model(int d, const ModelClass& cls, std::uint64_t seed);

}  // namespace isg
