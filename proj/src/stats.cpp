#include "isg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "isg/rng.hpp"

namespace isg {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double marginal_error(const std::vector<double>& estimate, const std::vector<double>& exact) {
  if (estimate.size() != exact.size())
    throw std::invalid_argument("marginal_error: length mismatch");
  if (estimate.empty()) throw std::invalid_argument("marginal_error: empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) sum += std::abs(estimate[i] - exact[i]);
  double err = sum / static_cast<double>(estimate.size());
  if (!(err >= 0.0 && err <= 1.0)) throw std::logic_error("marginal_error out of [0,1]");
  return err;
}

double marginal_error(const Marginals& estimate, const ExactResult& exact) {
  return marginal_error(estimate.p_plus, exact.marginals);
}

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // sample variance, k-1 denominator
};

MeanVar mean_var(const std::vector<double>& d) {
  MeanVar out;
  const double k = static_cast<double>(d.size());
  for (double v : d) out.mean += v;
  out.mean /= k;
  for (double v : d) out.var += (v - out.mean) * (v - out.mean);
  out.var = d.size() > 1 ? out.var / (k - 1.0) : 0.0;
  return out;
}

ZTestResult decide(double mean, double se, double alpha) {
  ZTestResult out;
  if (se == 0.0) {
    if (mean == 0.0) return out;  // indistinguishable
    out.degenerate = true;
    out.z = mean > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
    out.decision = mean < 0.0 ? ZDecision::better : ZDecision::worse;
    return out;
  }
  out.z = mean / se;
  out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.z)));
  if (out.p_value < alpha)
    out.decision = mean < 0.0 ? ZDecision::better : ZDecision::worse;
  return out;
}

}  // namespace

ZTestResult paired_z_test(const std::vector<double>& a, const std::vector<double>& b,
                          double alpha) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_z_test: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_z_test: need >= 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  MeanVar mv = mean_var(d);
  double se = std::sqrt(mv.var / static_cast<double>(d.size()));
  return decide(mv.mean, se, alpha);
}

ZTestResult stratified_z_test(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b, double alpha) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("stratified_z_test: stratum mismatch");
  double pooled_mean = 0.0, pooled_var = 0.0;
  const double strata = static_cast<double>(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].size() != b[s].size() || a[s].size() < 2)
      throw std::invalid_argument("stratified_z_test: each stratum needs >= 2 pairs");
    std::vector<double> d(a[s].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[s][i] - b[s][i];
    MeanVar mv = mean_var(d);
    pooled_mean += mv.mean / strata;
    pooled_var += mv.var / static_cast<double>(d.size()) / (strata * strata);
  }
  return decide(pooled_mean, std::sqrt(pooled_var), alpha);
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, int B, double alpha,
                                       std::uint64_t seed) {
  if (samples.size() < 2) throw std::invalid_argument("bootstrap_ci: need >= 2 samples");
  if (B < 1) throw std::invalid_argument("bootstrap_ci: B must be >= 1");
  Rng rng = Rng(seed).stream("bootstrap");
  const std::size_t k = samples.size();
  std::vector<double> means(B);
  for (int b = 0; b < B; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += samples[rng.uniform_int(k)];
    means[b] = sum / static_cast<double>(k);
  }
  std::sort(means.begin(), means.end());
  auto order_stat = [&](double q) {
    auto r = static_cast<std::size_t>(std::ceil(q * B));
    r = std::min<std::size_t>(std::max<std::size_t>(r, 1), B);
    return means[r - 1];
  };
  return {order_stat(alpha / 2.0), order_stat(1.0 - alpha / 2.0)};
}

Proportion proportion_with_ci(long count, long total) {
  if (total < 1) throw std::invalid_argument("proportion_with_ci: empty stratum");
  Proportion out;
  out.count = count;
  out.total = total;
  out.value = static_cast<double>(count) / static_cast<double>(total);
  double half = 1.96 * std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(total));
  out.lo = out.value - half;
  out.hi = out.value + half;
  return out;
}

double one_sided_proportion_p_value(long count_a, long total_a, long count_b, long total_b) {
  if (total_a < 1 || total_b < 1) throw std::invalid_argument("empty stratum");
  double pa = static_cast<double>(count_a) / total_a;
  double pb = static_cast<double>(count_b) / total_b;
  double pooled = static_cast<double>(count_a + count_b) / static_cast<double>(total_a + total_b);
  double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / total_a + 1.0 / total_b));
  if (se == 0.0) return pa > pb ? 0.0 : 1.0;
  return 1.0 - normal_cdf((pa - pb) / se);
}

}  // namespace isg
