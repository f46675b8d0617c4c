#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tropic/bicm.hpp"

using namespace tropic;
using testing_support::fixture_graph;
using testing_support::heavy_tailed_graph;

namespace {

// tests/oracles/bicm_fixture_oracle.py
constexpr double oracle_x[3] = {1.90640113643406, 1.90640113643406, 0.398235261188896};
constexpr double oracle_y[3] = {1.9064011364346, 1.9064011364346, 0.39823526118867};
constexpr double oracle_p[3][3] = {{0.784220721333542, 0.784220721333542, 0.431558557331404},
                                   {0.784220721333542, 0.784220721333542, 0.431558557331404},
                                   {0.431558557331613, 0.431558557331613, 0.136882885337573}};

}  // namespace

TEST(FitBicm, FixtureMatchesOracle) {
  auto model = fit_bicm(fixture_graph());
  for (node_index i = 0; i < 3; ++i) {
    EXPECT_NEAR(model.x()[i], oracle_x[i], 1e-8);
    EXPECT_NEAR(model.y()[i], oracle_y[i], 1e-8);
    for (node_index a = 0; a < 3; ++a) EXPECT_NEAR(link_probability(model, i, a), oracle_p[i][a], 1e-8);
  }
  EXPECT_NEAR(expected_degree(model, Layer::users, 0), 2.0, 1e-8);
  EXPECT_LE(model.tolerance_achieved(), 1e-8);
}

TEST(FitBicm, NewtonMatchesOracle) {
  auto model = fit_bicm(fixture_graph(), {1e-10, 1000, SolverMethod::newton});
  for (node_index i = 0; i < 3; ++i)
    for (node_index a = 0; a < 3; ++a) EXPECT_NEAR(model.p(i, a), oracle_p[i][a], 1e-8);
}

TEST(FitBicm, CompleteBipartiteIsForced) {
  BipartiteGraph g(4, {{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
  auto model = fit_bicm(g);
  for (node_index i = 0; i < 3; ++i)
    for (node_index a = 0; a < 4; ++a) EXPECT_EQ(link_probability(model, i, a), 1.0);
  EXPECT_EQ(model.tolerance_achieved(), 0.0);
  EXPECT_EQ(max_relative_residual(model, g), 0.0);
}

TEST(FitBicm, IsolatedUrlColumnIsZero) {
  BipartiteGraph g(4, {{0, 1}, {0, 2}, {1}});
  auto model = fit_bicm(g);
  for (node_index i = 0; i < 3; ++i) EXPECT_EQ(link_probability(model, i, 3), 0.0);
  EXPECT_EQ(expected_degree(model, Layer::urls, 3), 0.0);
  EXPECT_EQ(model.y()[3], 0.0);
  EXPECT_LE(max_relative_residual(model, g), 1e-8);
}

TEST(FitBicm, FullUserRowIsOne) {
  BipartiteGraph g(3, {{0, 1, 2}, {0, 1}, {2}, {1}});
  auto model = fit_bicm(g);
  EXPECT_TRUE(std::isinf(model.x()[0]));
  for (node_index a = 0; a < 3; ++a) EXPECT_EQ(link_probability(model, 0, a), 1.0);
  EXPECT_LE(max_relative_residual(model, g), 1e-8);
}

TEST(FitBicm, CascadingDegeneracy) {
  // Peeling the full user leaves url 2 with nothing left to match.
  BipartiteGraph g(3, {{0, 1, 2}, {0, 1}, {0}, {1}});
  auto model = fit_bicm(g);
  EXPECT_EQ(link_probability(model, 0, 2), 1.0);
  for (node_index i = 1; i < 4; ++i) EXPECT_EQ(link_probability(model, i, 2), 0.0);
  EXPECT_LE(max_relative_residual(model, g), 1e-8);
}

TEST(LinkProbability, UnitFitnessGivesHalf) {
  auto model = fit_bicm(BipartiteGraph(2, {{0}, {1}}));
  EXPECT_NEAR(model.x()[0], 1.0, 1e-9);
  EXPECT_NEAR(model.y()[0], 1.0, 1e-9);
  EXPECT_NEAR(link_probability(model, 0, 0), 0.5, 1e-9);
}

TEST(LinkProbability, ZeroFitnessGivesZero) {
  auto model = fit_bicm(BipartiteGraph(2, {{0}, {}}));
  EXPECT_EQ(model.x()[1], 0.0);
  EXPECT_EQ(link_probability(model, 1, 0), 0.0);
  EXPECT_EQ(expected_degree(model, Layer::users, 1), 0.0);
}

TEST(LinkProbability, IndexOutOfRange) {
  auto model = fit_bicm(fixture_graph());
  EXPECT_THROW(link_probability(model, 3, 0), index_out_of_range);
  EXPECT_THROW(link_probability(model, 0, 3), index_out_of_range);
  EXPECT_THROW(expected_degree(model, Layer::urls, 3), index_out_of_range);
}

TEST(FitBicm, EmptyGraphRejected) { EXPECT_THROW(fit_bicm(BipartiteGraph(2, {{}, {}})), empty_input); }

TEST(SolverConfig, Validation) {
  EXPECT_THROW(fit_bicm(fixture_graph(), {0.0, 10}), invalid_argument);
  EXPECT_THROW(fit_bicm(fixture_graph(), {1e-8, 0}), invalid_argument);
}

TEST(FitBicm, NoConvergenceReportsProgress) {
  auto g = heavy_tailed_graph(60, 120, 0.05, 3);
  try {
    fit_bicm(g, {1e-14, 2});
    FAIL() << "expected no_convergence";
  } catch (const no_convergence& e) {
    EXPECT_EQ(e.iterations, 2u);
    EXPECT_GT(e.residual, 1e-14);
  }
}

TEST(FitBicm, HeavyTailedResidualAndBounds) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto g = heavy_tailed_graph(200, 500, 0.03, seed);
    auto model = fit_bicm(g);
    EXPECT_LE(max_relative_residual(model, g), 1e-8) << seed;
    for (node_index i = 0; i < g.n_users(); ++i)
      for (node_index a = 0; a < g.n_urls(); ++a) {
        const double p = model.p(i, a);
        ASSERT_TRUE(p >= 0.0 && p <= 1.0);
      }
  }
}

TEST(FitBicm, NewtonAgreesWithFixedPoint) {
  auto g = heavy_tailed_graph(200, 500, 0.03, 11);
  auto fp = fit_bicm(g, {1e-10, 10000, SolverMethod::fixed_point});
  auto nt = fit_bicm(g, {1e-10, 10000, SolverMethod::newton});
  EXPECT_LE(max_relative_residual(nt, g), 1e-10);
  for (node_index i = 0; i < g.n_users(); i += 7)
    for (node_index a = 0; a < g.n_urls(); a += 3) EXPECT_NEAR(fp.p(i, a), nt.p(i, a), 1e-8);
}

TEST(FitBicm, PermutationEquivariance) {
  auto g = heavy_tailed_graph(80, 150, 0.05, 5);
  std::mt19937_64 rng(9);
  std::vector<node_index> pu(g.n_users()), pa(g.n_urls());
  std::iota(pu.begin(), pu.end(), 0);
  std::iota(pa.begin(), pa.end(), 0);
  std::shuffle(pu.begin(), pu.end(), rng);
  std::shuffle(pa.begin(), pa.end(), rng);
  std::vector<std::vector<node_index>> adj(g.n_users());
  for (node_index i = 0; i < g.n_users(); ++i)
    for (node_index a : g.adjacency()[i]) adj[pu[i]].push_back(pa[a]);
  BipartiteGraph h(g.n_urls(), std::move(adj));
  auto mg = fit_bicm(g);
  auto mh = fit_bicm(h);
  for (node_index i = 0; i < g.n_users(); ++i)
    for (node_index a = 0; a < g.n_urls(); ++a) ASSERT_NEAR(mg.p(i, a), mh.p(pu[i], pa[a]), 1e-12);
}

TEST(FitBicm, DegreeClassConsistencyAndMonotonicity) {
  auto g = heavy_tailed_graph(200, 500, 0.03, 7);
  auto model = fit_bicm(g);
  const auto& k = g.user_degrees();
  for (node_index i = 0; i < g.n_users(); ++i)
    for (node_index j = 0; j < g.n_users(); ++j) {
      if (k[i] == k[j]) {
        ASSERT_NEAR(model.x()[i], model.x()[j], 1e-10);
      } else if (k[i] > k[j]) {
        ASSERT_GE(model.x()[i], model.x()[j]);
      }
    }
  const auto& d = g.url_degrees();
  for (node_index a = 0; a < g.n_urls(); ++a)
    for (node_index b = 0; b < g.n_urls(); ++b) {
      if (d[a] == d[b]) {
        ASSERT_NEAR(model.y()[a], model.y()[b], 1e-10);
      } else if (d[a] > d[b]) {
        ASSERT_GE(model.y()[a], model.y()[b]);
      }
    }
}

TEST(FitBicm, Deterministic) {
  auto g = heavy_tailed_graph(100, 200, 0.04, 13);
  auto a = fit_bicm(g);
  auto b = fit_bicm(g);
  EXPECT_EQ(a.x(), b.x());
  EXPECT_EQ(a.y(), b.y());
}
