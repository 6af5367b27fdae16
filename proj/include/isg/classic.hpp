#pragma once

#include <cstdint>
#include <vector>

#include "isg/model.hpp"

namespace isg {

struct Marginals {
  std::vector<double> p_plus;  // estimate of P(X_i = +1)
  bool converged = true;
  long iterations_used = 0;
  double final_delta = 0.0;
};

struct IterationSpec {
  long max_iters = 1;
  double tolerance = 1e-7;
  double damping = 0.5;  // new = damping * old + (1 - damping) * proposed
};

// Stock settings of the comparison baselines.
inline constexpr IterationSpec kMeanFieldDefaults{1000000, 1e-5, 0.0};
inline constexpr IterationSpec kBpDefaults{100000, 1e-7, 0.5};
inline constexpr IterationSpec kTrwDefaults{100000, 1e-7, 0.5};
inline constexpr double kTrwRhoDefault = 0.55;

// Optional per-round message snapshots (probability of +1 for each
// directed message, update order 2e = u->v, 2e+1 = v->u).
struct MessageTrace {
  std::vector<std::vector<double>> rounds;
};

// Constant 0.5 estimate.
Marginals baseline(const IsingModel& model);

// Sequential (axis-parallel) mean field: q_i <- sigmoid(2 (b_i + sum_j
// w_ij (2 q_j - 1))). One iteration = one full sweep. Initialized
// uniformly at random in [0,1] per node unless `init` is given.
Marginals mean_field(const IsingModel& model, const IterationSpec& spec, std::uint64_t seed,
                     const std::vector<double>* init = nullptr);

// Loopy sum-product with simultaneous (double-buffered) updates, damped
// message smoothing and per-update normalization. Messages start
// uniform with seeded jitter of magnitude 1e-3 unless `init` is given.
Marginals belief_prop(const IsingModel& model, const IterationSpec& spec, std::uint64_t seed,
                      MessageTrace* trace = nullptr, const std::vector<double>* init = nullptr);

// Tree-reweighted sum-product with one constant edge-appearance
// probability rho for every edge; rho = 1 reduces to belief_prop.
Marginals trw(const IsingModel& model, double rho, const IterationSpec& spec, std::uint64_t seed,
              MessageTrace* trace = nullptr, const std::vector<double>* init = nullptr);

// Systematic-scan Gibbs sampling; one iteration = one full sweep. The
// first floor(iters * burn_in_fraction) sweeps are discarded.
Marginals gibbs(const IsingModel& model, long iters, double burn_in_fraction, std::uint64_t seed,
                const Assignment* init = nullptr);

}  // namespace isg
