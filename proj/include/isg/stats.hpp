#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "isg/classic.hpp"
#include "isg/exact.hpp"

namespace isg {

// Mean over nodes of |estimate - exact| for P(X_i = +1).
double marginal_error(const Marginals& estimate, const ExactResult& exact);
double marginal_error(const std::vector<double>& estimate, const std::vector<double>& exact);

enum class ZDecision { better, worse, indistinguishable };

struct ZTestResult {
  ZDecision decision = ZDecision::indistinguishable;
  double z = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // zero variance with nonzero mean
};

// Paired two-sided z-test on the differences a_i - b_i (same model
// order in both). "better" means a has the smaller mean (error metric).
// Zero variance: zero mean is indistinguishable; a nonzero mean decides
// by sign and sets the degenerate flag.
ZTestResult paired_z_test(const std::vector<double>& a, const std::vector<double>& b,
                          double alpha);

// Pooled test over strata (one stratum per q): the pooled difference
// mean gets variance sum_q var_q / k_q / (#q)^2, so strata with
// different spreads are weighted correctly. Each stratum needs >= 2
// paired samples.
ZTestResult stratified_z_test(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b, double alpha);

// Percentile bootstrap CI of the mean: B seeded resamples, interval at
// the ceil(q B)-th order statistics of the resampled means.
std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, int B, double alpha,
                                       std::uint64_t seed);

struct Proportion {
  double value = 0.0;
  double lo = 0.0;  // Wald 95% CI
  double hi = 0.0;
  long count = 0;
  long total = 0;
};

Proportion proportion_with_ci(long count, long total);

// One-sided two-proportion z-test that proportion a > proportion b.
double one_sided_proportion_p_value(long count_a, long total_a, long count_b, long total_b);

double normal_cdf(double z);

}  // namespace isg
