#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "isg/exact.hpp"
#include "isg/fp.hpp"
#include "isg/model.hpp"
#include "isg/rng.hpp"
#include "test_util.hpp"

using namespace isg;

namespace {

double tree_score(const IsingModel& m, const std::vector<double>& scores,
                  const SpanningTree& t) {
  double s = 0.0;
  for (int k : t.edge_ids) s += scores[k];
  return s;
}

// All spanning trees by brute force over edge subsets (tiny graphs).
std::vector<SpanningTree> all_spanning_trees(const IsingModel& m) {
  std::vector<SpanningTree> out;
  const int n = m.num_nodes(), e = m.num_edges();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << e); ++mask) {
    if (std::popcount(mask) != n - 1) continue;
    SpanningTree t;
    for (int k = 0; k < e; ++k)
      if ((mask >> k) & 1) t.edge_ids.push_back(k);
    try {
      validate_tree(m, t);
      out.push_back(std::move(t));
    } catch (const std::invalid_argument&) {
    }
  }
  return out;
}

double enumerate_max_restricted(const IsingModel& m, const SpanningTree& t) {
  double best = -1e300;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m.num_nodes()); ++bits)
    best = std::max(best, restricted_potential(m, testutil::assignment_from_bits(m.num_nodes(), bits), t));
  return best;
}

}  // namespace

TEST_CASE("max spanning tree picks the heaviest edges") {
  IsingModel tri(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}, {0.0, 0.0, 0.0});
  SpanningTree t = max_spanning_tree(tri, {3.0, 2.0, 1.0}, 1);
  std::set<int> ids(t.edge_ids.begin(), t.edge_ids.end());
  CHECK(ids == std::set<int>{0, 1});
}

TEST_CASE("tree-structured graphs have a unique spanning tree") {
  IsingModel chain(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}, {0, 0, 0, 0});
  for (std::uint64_t s = 0; s < 5; ++s) {
    SpanningTree t = max_spanning_tree(chain, {-1.0, 5.0, 0.0}, s);
    CHECK(t.edge_ids.size() == 3);
  }
  IsingModel disconnected(3, {{0, 1, 1.0}}, {0, 0, 0});
  CHECK_THROWS_AS(max_spanning_tree(disconnected, {1.0}, 0), std::invalid_argument);
}

TEST_CASE("tied scores reach every spanning tree") {
  IsingModel tri(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}, {0.0, 0.0, 0.0});
  std::map<std::set<int>, int> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    SpanningTree t = max_spanning_tree(tri, {1.0, 1.0, 1.0}, s);
    seen[std::set<int>(t.edge_ids.begin(), t.edge_ids.end())]++;
  }
  CHECK(seen.size() == 3);  // the three trees of a triangle
  for (const auto& [ids, count] : seen) CHECK(count > 200);
}

TEST_CASE("max spanning tree matches enumeration") {
  Rng rng(111);
  for (int s = 0; s < 100; ++s) {
    IsingModel m = testutil::random_connected_model(4 + rng.uniform_int(4), 0.5, 2.0,
                                                    rng.next_u64());
    std::vector<double> scores(m.num_edges());
    for (double& v : scores) v = rng.uniform(-2.0, 2.0);
    SpanningTree got = max_spanning_tree(m, scores, rng.next_u64());
    double best = -1e300;
    for (const SpanningTree& t : all_spanning_trees(m))
      best = std::max(best, tree_score(m, scores, t));
    CHECK(tree_score(m, scores, got) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("tree MAP on a pair") {
  IsingModel m(2, {{0, 1, 1.0}}, {0.1, 0.1});
  SpanningTree t{{0}};
  Assignment x = tree_map(m, t, 0);
  CHECK(x == Assignment{+1, +1});
  CHECK(restricted_potential(m, x, t) == doctest::Approx(1.2));
}

TEST_CASE("tree MAP ties split across seeds") {
  IsingModel m(2, {{0, 1, 1.0}}, {0.0, 0.0});
  SpanningTree t{{0}};
  int plus = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Assignment x = tree_map(m, t, s);
    CHECK(x[0] == x[1]);
    if (x[0] == 1) ++plus;
  }
  CHECK(plus > 400);
  CHECK(plus < 600);
}

TEST_CASE("tree MAP on a frustrated chain") {
  IsingModel m(3, {{0, 1, -2.0}, {1, 2, -2.0}}, {1.0, 0.0, 0.0});
  SpanningTree t{{0, 1}};
  Assignment x = tree_map(m, t, 3);
  CHECK(x == Assignment{+1, -1, +1});
  CHECK(restricted_potential(m, x, t) == doctest::Approx(5.0));
}

TEST_CASE("tree MAP sampling is uniform over the maximizer set") {
  // Star 0-{1,2}: given x0=+1 node 2 is tied (2 maximizers), given
  // x0=-1 it is pinned (1 maximizer); the bias on node 0 balances the
  // two branches exactly, so the three maximizers each get mass 1/3.
  IsingModel m(3, {{0, 1, 1.0}, {0, 2, -0.5}}, {0.5, 0.0, 0.5});
  SpanningTree t{{0, 1}};
  std::map<std::uint64_t, int> counts;
  const int trials = 6000;
  for (int s = 0; s < trials; ++s) {
    Assignment x = tree_map(m, t, 10000 + s);
    CHECK(restricted_potential(m, x, t) == doctest::Approx(1.5).epsilon(1e-12));
    std::uint64_t key = (x[0] == 1) | ((x[1] == 1) << 1) | ((x[2] == 1) << 2);
    counts[key]++;
  }
  REQUIRE(counts.size() == 3);
  for (const auto& [key, c] : counts) {
    double freq = static_cast<double>(c) / trials;
    CHECK(std::abs(freq - 1.0 / 3.0) < 0.025);  // ~4 sigma
  }
}

TEST_CASE("tree MAP attains the enumeration maximum") {
  Rng rng(222);
  for (int s = 0; s < 100; ++s) {
    IsingModel m = testutil::random_connected_model(3 + rng.uniform_int(10), 0.4, 3.0,
                                                    rng.next_u64());
    std::vector<double> scores(m.num_edges(), 1.0);
    SpanningTree t = max_spanning_tree(m, scores, rng.next_u64());
    double best = enumerate_max_restricted(m, t);
    for (int rep = 0; rep < 3; ++rep) {
      Assignment x = tree_map(m, t, rng.next_u64());
      CHECK(restricted_potential(m, x, t) == best);
    }
  }
}

TEST_CASE("fp running average equals the mean of the v updates") {
  for (FpVariant variant : {FpVariant::ce, FpVariant::msne}) {
    IsingModel m = generate_model(3, MixedClass{2.5}, 51);
    auto [marg, state] = fp_run(m, 60, variant, 9);
    REQUIRE(state.assignments.size() == 61);
    REQUIRE(state.trees.size() == 60);
    REQUIRE(state.s_draws.size() == 60);

    std::vector<double> mean(m.num_edges(), 0.0);
    for (int l = 0; l <= state.rounds; ++l) {
      const Assignment& x = state.assignments[l];
      std::vector<char> in_tree(m.num_edges(), 1);
      if (l > 0 && variant == FpVariant::ce) {
        std::fill(in_tree.begin(), in_tree.end(), 0);
        for (int k : state.trees[state.s_draws[l - 1] - 1].edge_ids) in_tree[k] = 1;
      }
      for (int k = 0; k < m.num_edges(); ++k) {
        const Edge& e = m.edges()[k];
        double v = in_tree[k] ? static_cast<double>(x[e.u] * x[e.v]) : 0.0;
        mean[k] += v;
      }
    }
    for (int k = 0; k < m.num_edges(); ++k) {
      mean[k] /= state.rounds + 1;
      CHECK(std::abs(mean[k] - state.mu_hat[k]) <= 1e-12);
    }
  }
}

TEST_CASE("fp on a zero model hovers around one half") {
  IsingModel zero(4, build_grid(2), {0, 0, 0, 0}, 2);
  auto [marg, state] = fp_run(zero, 500, FpVariant::ce, 77);
  for (double p : marg.p_plus) CHECK(std::abs(p - 0.5) < 0.09);  // ~4 sigma at m=500
}

TEST_CASE("fp variants coincide on tree graphs") {
  IsingModel chain = testutil::random_tree_model(6, 3.0, 99);
  auto [m_ce, s_ce] = fp_run(chain, 40, FpVariant::ce, 5);
  auto [m_ms, s_ms] = fp_run(chain, 40, FpVariant::msne, 5);
  CHECK(s_ce.assignments == s_ms.assignments);
  for (int k = 0; k < chain.num_edges(); ++k) CHECK(s_ce.mu_hat[k] == s_ms.mu_hat[k]);
  CHECK(m_ce.p_plus == m_ms.p_plus);
}

TEST_CASE("fp is deterministic per seed") {
  IsingModel m = generate_model(3, SignProbClass{4.0, 0.5}, 8);
  auto a = fp_run(m, 30, FpVariant::ce, 123);
  auto b = fp_run(m, 30, FpVariant::ce, 123);
  CHECK(a.second.assignments == b.second.assignments);
  CHECK(a.first.p_plus == b.first.p_plus);
  auto c = fp_run(m, 30, FpVariant::ce, 124);
  CHECK(a.second.assignments != c.second.assignments);
}

TEST_CASE("fp on a single strongly attractive edge collapses to the MAP") {
  // The joint-assignment player's best response to the only spanning
  // tree is the unique potential maximizer (+1,+1), so the estimator
  // approaches a point mass rather than the exact marginals (~0.768).
  IsingModel m(2, {{0, 1, 4.0}}, {0.3, 0.3});
  ExactResult ex = brute_force(m);
  CHECK(ex.marginals[0] == doctest::Approx(0.7684).epsilon(1e-3));
  for (int s = 0; s < 20; ++s) {
    auto [marg, state] = fp_run(m, 500, FpVariant::ce, 3000 + s);
    CHECK(marg.p_plus[0] >= 0.99);
    CHECK(marg.p_plus[1] >= 0.99);
  }
}

TEST_CASE("fp log Z bound components") {
  // A point history (m = 1) bounds ln Z by the coupling term alone.
  IsingModel m = generate_model(2, MixedClass{2.0}, 61);
  auto [marg1, state1] = fp_run(m, 1, FpVariant::msne, 4);
  auto [coupling, entropy] = fp_log_z_bound(m, state1);
  const Assignment& x1 = state1.assignments[0];
  double expect = 0.0;
  for (const Edge& e : m.edges()) expect += e.w * x1[e.u] * x1[e.v];
  CHECK(coupling == doctest::Approx(expect).epsilon(1e-12));
  CHECK(entropy == 0.0);
  CHECK(coupling + entropy <= brute_force(m).log_z + 1e-9);

  // Zero model: coupling 0, entropy bounded by n ln 2.
  IsingModel zero(4, build_grid(2), {0, 0, 0, 0}, 2);
  auto [margz, statez] = fp_run(zero, 200, FpVariant::ce, 7);
  auto [cz, hz] = fp_log_z_bound(zero, statez);
  CHECK(cz == 0.0);
  CHECK(hz <= 4 * std::log(2.0) + 1e-12);

  // Random grids: the bound must never exceed the exact ln Z.
  for (int s = 0; s < 10; ++s) {
    IsingModel g = generate_model(2, MixedClass{3.0}, 400 + s);
    auto [mg, sg] = fp_run(g, 200, s % 2 ? FpVariant::ce : FpVariant::msne, s);
    auto [cg, hg] = fp_log_z_bound(g, sg);
    CHECK(cg + hg <= brute_force(g).log_z + 1e-9);
  }
}
