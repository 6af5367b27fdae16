#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "isg/classic.hpp"
#include "isg/model.hpp"

namespace isg {

enum class FpVariant { ce, msne };

// Full trace of one fictitious-play run between the joint-assignment
// player and the spanning-tree player. Immutable after the run.
struct FpState {
  int rounds = 0;                       // l, number of best-response rounds
  std::vector<double> mu_hat;           // per-edge running average of the v updates
  std::vector<SpanningTree> trees;      // T^(1..l)
  std::vector<int> s_draws;             // s_1..s_l, each uniform on {1..l}
  std::vector<Assignment> assignments;  // x^(1..l+1)
  std::vector<long> plus_counts;        // per-node +1 counts over assignments
};

// Maximum-weight spanning tree under the given per-edge scores
// (Kruskal). Ties are broken by a seeded shuffle of equal-score runs
// inside the greedy scan, approximating a uniform draw over the argmax
// set. Throws std::invalid_argument on disconnected graphs.
SpanningTree max_spanning_tree(const IsingModel& model, const std::vector<double>& edge_scores,
                               std::uint64_t seed);

// A maximizer of restricted_potential(model, ., tree): max-product
// dynamic programming on the tree (rooted at node 0) with argmax
// back-pointer sets, then downward sampling that is uniform over the
// full maximizer set.
Assignment tree_map(const IsingModel& model, const SpanningTree& tree, std::uint64_t seed);

// Sequential hybrid fictitious play: the tree player best-responds to
// the running pair averages mu_hat with a maximum spanning tree scored
// by w_ij * mu_ij; the assignment player best-responds to a tree drawn
// uniformly from the tree history via the tree MAP. The CE variant
// masks each pair update by membership in the responded-to tree; the
// MSNE variant uses the raw pair products. Marginal estimates are the
// empirical +1 frequencies over all m+1 assignments.
std::pair<Marginals, FpState> fp_run(const IsingModel& model, int m, FpVariant variant,
                                     std::uint64_t seed);

// Components (sum_ij w_ij v_ij, H(Qhat_X)) of the bound
//   ln Z >= sum_ij w_ij v_ij + H(Qhat_X),
// where v_ij and Qhat_X are the empirical pair averages and assignment
// distribution of x^(1..m). Requires n <= 25.
std::pair<double, double> fp_log_z_bound(const IsingModel& model, const FpState& state);

}  // namespace isg
