#pragma once

#include <vector>

#include "isg/model.hpp"

namespace isg {

struct ExactResult {
  std::vector<double> marginals;  // P(X_i = +1)
  double log_z = 0.0;
};

// Ground truth by exhaustive enumeration over {-1,+1}^n. All sums are
// accumulated max-shifted in log space. Throws infeasible_error when
// n > max_nodes.
ExactResult brute_force(const IsingModel& model, int max_nodes = 25);

// Ground truth for d x d grid models by a column transfer matrix with
// 2^d column states, log-space throughout. Throws infeasible_error when
// d > max_dim and std::invalid_argument for non-grid models.
ExactResult transfer_matrix(const IsingModel& model, int max_dim = 16);

// Picks transfer_matrix for tagged grids within its cap, otherwise
// brute force within its cap, otherwise throws infeasible_error.
ExactResult exact_auto(const IsingModel& model);

}  // namespace isg
