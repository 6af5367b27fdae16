#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isg/errors.hpp"
#include "isg/exact.hpp"
#include "isg/model.hpp"
#include "isg/rng.hpp"
#include "test_util.hpp"

using namespace isg;

TEST_CASE("single node") {
  IsingModel m(1, {}, {1.0});
  ExactResult r = brute_force(m);
  const double expected = 1.0 / (1.0 + std::exp(-2.0));  // e / (e + 1/e)
  CHECK(r.marginals[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.log_z == doctest::Approx(std::log(std::exp(1.0) + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("zero model is uniform") {
  IsingModel m(4, build_grid(2), {0, 0, 0, 0}, 2);
  ExactResult r = brute_force(m);
  for (double p : r.marginals) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.log_z == doctest::Approx(4 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("two coupled nodes") {
  IsingModel m(2, {{0, 1, 1.0}}, {0.0, 0.0});
  ExactResult r = brute_force(m);
  CHECK(r.marginals[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.marginals[1] == doctest::Approx(0.5).epsilon(1e-12));
  // Z enumerated over the 4 states: 2e^1 + 2e^-1.
  CHECK(r.log_z ==
        doctest::Approx(std::log(2 * std::exp(1.0) + 2 * std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("transfer matrix zero grid") {
  IsingModel m(9, build_grid(3), std::vector<double>(9, 0.0), 3);
  ExactResult r = transfer_matrix(m);
  for (double p : r.marginals) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.log_z == doctest::Approx(9 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("oracle equivalence on random grids") {
  for (int d : {2, 3, 4}) {
    for (int s = 0; s < 20; ++s) {
      IsingModel m = generate_model(d, MixedClass{4.0}, 1000 * d + s);
      ExactResult bf = brute_force(m);
      ExactResult tm = transfer_matrix(m);
      CHECK(std::abs(bf.log_z - tm.log_z) <= 1e-9);
      for (int i = 0; i < m.num_nodes(); ++i)
        CHECK(std::abs(bf.marginals[i] - tm.marginals[i]) <= 1e-10);
    }
  }
}

TEST_CASE("oracle equivalence at the enumeration cap") {
  // n = 25 crosses the periodic drift-reset points of the Gray-code
  // sweep, which smaller grids never reach.
  IsingModel m = generate_model(5, MixedClass{4.0}, 5005);
  ExactResult bf = brute_force(m);
  ExactResult tm = transfer_matrix(m);
  CHECK(std::abs(bf.log_z - tm.log_z) <= 1e-9);
  for (int i = 0; i < 25; ++i) CHECK(std::abs(bf.marginals[i] - tm.marginals[i]) <= 1e-10);
}

TEST_CASE("spin-flip symmetry") {
  for (int s = 0; s < 5; ++s) {
    IsingModel m = generate_model(3, MixedClass{3.0}, 777 + s);
    std::vector<double> neg = m.biases();
    for (double& b : neg) b = -b;
    IsingModel flipped(m.num_nodes(), m.edges(), neg, m.grid_dim());
    ExactResult a = brute_force(m), b = brute_force(flipped);
    ExactResult at = transfer_matrix(m), bt = transfer_matrix(flipped);
    for (int i = 0; i < m.num_nodes(); ++i) {
      CHECK(std::abs(a.marginals[i] - (1.0 - b.marginals[i])) <= 1e-12);
      CHECK(std::abs(at.marginals[i] - (1.0 - bt.marginals[i])) <= 1e-12);
    }
  }
}

TEST_CASE("log Z dominates every potential value") {
  Rng rng(555);
  for (int s = 0; s < 10; ++s) {
    IsingModel m = testutil::random_connected_model(8, 0.3, 4.0, rng.next_u64());
    ExactResult r = brute_force(m);
    for (int rep = 0; rep < 20; ++rep) {
      Assignment x = testutil::random_assignment(8, rng);
      CHECK(r.log_z >= potential(m, x));
    }
  }
}

TEST_CASE("caps and preconditions") {
  IsingModel big = testutil::random_tree_model(26, 1.0, 3);
  CHECK_THROWS_AS(brute_force(big), infeasible_error);
  CHECK_NOTHROW(brute_force(big, 26));

  IsingModel tree = testutil::random_tree_model(4, 1.0, 4);
  CHECK_THROWS_AS(transfer_matrix(tree), std::invalid_argument);

  IsingModel grid = generate_model(3, MixedClass{1.0}, 5);
  CHECK_THROWS_AS(transfer_matrix(grid, 2), infeasible_error);
  CHECK_NOTHROW(exact_auto(grid));
}
