#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isg/classic.hpp"
#include "isg/exact.hpp"
#include "isg/model.hpp"
#include "isg/rng.hpp"
#include "test_util.hpp"

using namespace isg;

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double max_abs_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("baseline is constant 0.5") {
  IsingModel m = generate_model(3, MixedClass{2.0}, 1);
  Marginals r = baseline(m);
  CHECK(r.converged);
  for (double p : r.p_plus) CHECK(p == 0.5);

  IsingModel zero(4, build_grid(2), {0, 0, 0, 0}, 2);
  ExactResult ex = brute_force(zero);
  CHECK(max_abs_gap(baseline(zero).p_plus, ex.marginals) <= 1e-12);
}

TEST_CASE("mean field single node is exact") {
  IsingModel m(1, {}, {1.0});
  Marginals r = mean_field(m, kMeanFieldDefaults, 3);
  CHECK(r.converged);
  CHECK(r.p_plus[0] == doctest::Approx(sigmoid(2.0)).epsilon(1e-9));
  CHECK(r.p_plus[0] == doctest::Approx(brute_force(m).marginals[0]).epsilon(1e-9));
}

TEST_CASE("mean field zero model stays uniform from symmetric start") {
  IsingModel m(4, build_grid(2), {0, 0, 0, 0}, 2);
  std::vector<double> init(4, 0.5);
  Marginals r = mean_field(m, kMeanFieldDefaults, 3, &init);
  CHECK(r.converged);
  for (double p : r.p_plus) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mean field breaks symmetry on a strongly coupled pair") {
  IsingModel m(2, {{0, 1, 3.0}}, {0.0, 0.0});
  Marginals r = mean_field(m, kMeanFieldDefaults, 17);
  CHECK(r.converged);
  // Both variables lock onto the same side, far from 0.5.
  CHECK(std::abs(r.p_plus[0] - 0.5) > 0.4);
  CHECK(std::abs(r.p_plus[0] - r.p_plus[1]) < 1e-4);
}

TEST_CASE("bp single node") {
  IsingModel m(1, {}, {-0.8});
  Marginals r = belief_prop(m, kBpDefaults, 5);
  CHECK(r.converged);
  CHECK(r.p_plus[0] == doctest::Approx(sigmoid(-1.6)).epsilon(1e-12));
}

TEST_CASE("bp is exact on trees") {
  int failures = 0;
  for (int s = 0; s < 100; ++s) {
    int n = 3 + s % 10;  // up to 12
    IsingModel m = testutil::random_tree_model(n, 4.0, 9000 + s);
    Marginals r = belief_prop(m, kBpDefaults, s);
    ExactResult ex = brute_force(m);
    CHECK(r.converged);
    if (max_abs_gap(r.p_plus, ex.marginals) > 1e-6) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("trw with rho=1 follows identical trajectories to bp") {
  for (int s = 0; s < 20; ++s) {
    IsingModel m = s % 2 == 0 ? generate_model(3, MixedClass{4.0}, 600 + s)
                              : testutil::random_connected_model(8, 0.3, 4.0, 600 + s);
    IterationSpec spec{50, 0.0, 0.5};  // fixed 50 rounds, no early stop
    MessageTrace bp_trace, trw_trace;
    belief_prop(m, spec, 42 + s, &bp_trace);
    trw(m, 1.0, spec, 42 + s, &trw_trace);
    REQUIRE(bp_trace.rounds.size() == trw_trace.rounds.size());
    double gap = 0.0;
    for (std::size_t r = 0; r < bp_trace.rounds.size(); ++r)
      gap = std::max(gap, max_abs_gap(bp_trace.rounds[r], trw_trace.rounds[r]));
    CHECK(gap <= 1e-12);
  }
}

TEST_CASE("trw invariants") {
  IsingModel single(1, {}, {0.4});
  for (double rho : {0.55, 0.9, 1.0})
    CHECK(trw(single, rho, kTrwDefaults, 1).p_plus[0] ==
          doctest::Approx(sigmoid(0.8)).epsilon(1e-12));

  IsingModel zero(9, build_grid(3), std::vector<double>(9, 0.0), 3);
  Marginals r = trw(zero, 0.55, kTrwDefaults, 11);
  CHECK(r.converged);
  for (double p : r.p_plus) CHECK(p == doctest::Approx(0.5).epsilon(1e-5));

  CHECK_THROWS_AS(trw(zero, 0.0, kTrwDefaults, 1), std::invalid_argument);
  CHECK_THROWS_AS(trw(zero, 1.5, kTrwDefaults, 1), std::invalid_argument);
}

TEST_CASE("bp records non-convergence instead of failing") {
  IsingModel m = generate_model(3, MixedClass{4.0}, 21);
  IterationSpec spec{1, 1e-12, 0.5};
  Marginals r = belief_prop(m, spec, 2);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations_used == 1);
  for (double p : r.p_plus) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("gibbs on symmetric and single-node models") {
  IsingModel zero(9, build_grid(3), std::vector<double>(9, 0.0), 3);
  Marginals rz = gibbs(zero, 100000, 0.1, 8);
  for (double p : rz.p_plus) CHECK(std::abs(p - 0.5) < 0.02);

  IsingModel single(1, {}, {1.0});
  Marginals rs = gibbs(single, 100000, 0.1, 9);
  CHECK(std::abs(rs.p_plus[0] - sigmoid(2.0)) < 0.01);
}

TEST_CASE("gibbs tracks the exact marginals in a fast-mixing regime") {
  IsingModel m = generate_model(3, MixedClass{1.0}, 31);
  ExactResult ex = brute_force(m);
  Marginals r = gibbs(m, 1000000, 0.1, 12);
  double err = 0.0;
  for (int i = 0; i < 9; ++i) err += std::abs(r.p_plus[i] - ex.marginals[i]);
  CHECK(err / 9 <= 0.01);
}

TEST_CASE("gibbs error shrinks with more sweeps") {
  IsingModel m = generate_model(3, MixedClass{1.0}, 77);
  ExactResult ex = brute_force(m);
  double err_small = 0.0, err_big = 0.0;
  for (int s = 0; s < 10; ++s) {
    err_small += max_abs_gap(gibbs(m, 1000, 0.1, 100 + s).p_plus, ex.marginals);
    err_big += max_abs_gap(gibbs(m, 1000000, 0.1, 200 + s).p_plus, ex.marginals);
  }
  CHECK(err_big < err_small);
}

TEST_CASE("deterministic algorithms are spin-flip covariant") {
  Rng rng(4040);
  for (int s = 0; s < 5; ++s) {
    IsingModel m = testutil::random_connected_model(6, 0.4, 3.0, rng.next_u64());
    std::vector<double> neg = m.biases();
    for (double& b : neg) b = -b;
    IsingModel flipped(m.num_nodes(), m.edges(), neg);

    std::vector<double> q0(6), q1(6);
    Rng init = rng.stream("init" + std::to_string(s));
    for (int i = 0; i < 6; ++i) {
      q0[i] = init.uniform();
      q1[i] = 1.0 - q0[i];
    }
    Marginals a = mean_field(m, kMeanFieldDefaults, 0, &q0);
    Marginals b = mean_field(flipped, kMeanFieldDefaults, 0, &q1);
    CHECK(a.iterations_used == b.iterations_used);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(a.p_plus[i] - (1.0 - b.p_plus[i])) <= 1e-12);

    std::vector<double> m0(2 * m.num_edges()), m1(2 * m.num_edges());
    for (std::size_t k = 0; k < m0.size(); ++k) {
      m0[k] = 0.5 + init.uniform(-1e-3, 1e-3);
      m1[k] = 1.0 - m0[k];
    }
    Marginals ba = belief_prop(m, kBpDefaults, 0, nullptr, &m0);
    Marginals bb = belief_prop(flipped, kBpDefaults, 0, nullptr, &m1);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ba.p_plus[i] - (1.0 - bb.p_plus[i])) <= 1e-12);

    Marginals ta = trw(m, 0.55, kTrwDefaults, 0, nullptr, &m0);
    Marginals tb = trw(flipped, 0.55, kTrwDefaults, 0, nullptr, &m1);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(ta.p_plus[i] - (1.0 - tb.p_plus[i])) <= 1e-12);
  }
}

TEST_CASE("gibbs is spin-flip covariant in distribution") {
  IsingModel m = generate_model(2, MixedClass{1.5}, 99);
  std::vector<double> neg = m.biases();
  for (double& b : neg) b = -b;
  IsingModel flipped(m.num_nodes(), m.edges(), neg, m.grid_dim());

  const int seeds = 30;
  std::vector<double> mean_a(4, 0.0), mean_b(4, 0.0);
  for (int s = 0; s < seeds; ++s) {
    Marginals a = gibbs(m, 20000, 0.1, 1000 + s);
    Marginals b = gibbs(flipped, 20000, 0.1, 2000 + s);
    for (int i = 0; i < 4; ++i) {
      mean_a[i] += a.p_plus[i] / seeds;
      mean_b[i] += b.p_plus[i] / seeds;
    }
  }
  for (int i = 0; i < 4; ++i) CHECK(std::abs(mean_a[i] - (1.0 - mean_b[i])) < 0.02);
}

TEST_CASE("all estimators are reproducible and bounded") {
  IsingModel m = generate_model(3, MixedClass{3.0}, 7);
  auto check = [&](const Marginals& a, const Marginals& b) {
    REQUIRE(a.p_plus.size() == b.p_plus.size());
    for (std::size_t i = 0; i < a.p_plus.size(); ++i) {
      CHECK(a.p_plus[i] == b.p_plus[i]);  // bitwise
      CHECK(a.p_plus[i] >= 0.0);
      CHECK(a.p_plus[i] <= 1.0);
    }
  };
  check(mean_field(m, kMeanFieldDefaults, 5), mean_field(m, kMeanFieldDefaults, 5));
  check(belief_prop(m, kBpDefaults, 5), belief_prop(m, kBpDefaults, 5));
  check(trw(m, 0.55, kTrwDefaults, 5), trw(m, 0.55, kTrwDefaults, 5));
  check(gibbs(m, 5000, 0.1, 5), gibbs(m, 5000, 0.1, 5));
}
