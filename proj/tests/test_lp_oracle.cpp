#include <gtest/gtest.h>

#include <cmath>

#include <asymdynkin/lp_oracle.hpp>

#include "support.hpp"

using namespace asymdynkin;

namespace {

ScenarioGame dominance_game(double prior) {
  ScenarioGame g;
  g.tree = FiltrationTree::chain(1);
  g.grid = TimeGrid::uniform(1, 1.0);
  g.prior = prior;
  // stopping payoffs at time 0 dominate everything available later
  g.payoffs[0] = {{2.0, -2.0}, {-1.0, -3.0}, {0.5, -2.5}};
  g.payoffs[1] = {{3.0, -1.0}, {-0.5, -2.0}, {1.0, -1.5}};
  return g;
}

// Brute-force pair-row minimax value for tiny games: every pure row, mixed
// over by a fine simplex grid, is not available; instead check the saddle
// inequalities of the reported mixes against every pure pair and column.
void expect_saddle(const GameMatrix& M, const ScenarioSolution& sol, double tol) {
  std::size_t R = M.rows.size();
  for (std::size_t s = 0; s < R; ++s) {
    double v = 0.0;
    for (std::size_t t = 0; t < R; ++t)
      v += M.prior * sol.mix1[t] * M.A[1](t, s) + (1 - M.prior) * sol.mix0[t] * M.A[0](t, s);
    EXPECT_LE(v, sol.value + tol);
  }
  for (std::size_t t0 = 0; t0 < R; ++t0)
    for (std::size_t t1 = 0; t1 < R; ++t1) {
      double v = 0.0;
      for (std::size_t s = 0; s < R; ++s) v += sol.col_mix[s] * M.entry(t0, t1, s);
      EXPECT_GE(v, sol.value - tol);
    }
}

}  // namespace

TEST(EnumerateStoppingRules, Counts) {
  EXPECT_EQ(enumerate_stopping_rules(FiltrationTree::chain(4)).size(), 5u);
  EXPECT_EQ(enumerate_stopping_rules(FiltrationTree::binary(1)).size(), 2u);
  EXPECT_EQ(enumerate_stopping_rules(FiltrationTree::binary(2)).size(), 5u);
  EXPECT_EQ(enumerate_stopping_rules(FiltrationTree::binary(3)).size(), 26u);
  EXPECT_EQ(enumerate_stopping_rules(FiltrationTree::binary(4)).size(), 677u);
  try {
    enumerate_stopping_rules(FiltrationTree::binary(10), 1000000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EnumerationCapExceeded);
  }
}

TEST(EnumerateStoppingRules, OneStopPerPathAndDistinct) {
  auto t = FiltrationTree::binary(3);
  auto rules = enumerate_stopping_rules(t);
  for (const auto& r : rules)
    for (const auto& path : t.paths()) {
      int stops = 0;
      for (int n : path) stops += r.stop[n];
      EXPECT_EQ(stops, 1);
    }
  for (std::size_t a = 0; a < rules.size(); ++a)
    for (std::size_t b = a + 1; b < rules.size(); ++b) EXPECT_NE(rules[a].stop, rules[b].stop);
}

TEST(BuildMatrix, Examples) {
  auto g = dominance_game(0.3);
  auto M = build_matrix(g);
  // rule 0 stops at the root, rule 1 at the horizon
  EXPECT_DOUBLE_EQ(M.entry(0, 0, 0), 0.3 * 1.0 + 0.7 * 0.5);
  EXPECT_DOUBLE_EQ(M.entry(0, 1, 1), 0.3 * g.payoffs[1].h[1] + 0.7 * g.payoffs[0].f[0]);
}

TEST(BuildMatrix, EntriesMatchMonteCarlo) {
  auto g = testsupport::random_game(11, 2, 0.5);
  auto M = build_matrix(g);
  RandomDevice dev(12);
  for (std::size_t t = 0; t < M.rows.size(); t += 2)
    for (std::size_t s = 0; s < M.cols.size(); s += 2) {
      auto est = expected_payoff_mc(g.tree, g.payoffs[0], pure_process(g.tree, M.rows[t]), pure_process(g.tree, M.cols[s]),
                                    100000, dev);
      EXPECT_LE(std::abs(est.mean - M.A[0](t, s)), 4 * est.stderr_ + 1e-10);
    }
}

TEST(SolveZeroSum, MatchingPennies) {
  Eigen::MatrixXd A(2, 2);
  A << 1, -1, -1, 1;
  auto s = solve_zero_sum(A);
  EXPECT_NEAR(s.value, 0.0, 1e-12);
  EXPECT_NEAR(s.row_mix[0], 0.5, 1e-12);
  EXPECT_NEAR(s.col_mix[0], 0.5, 1e-12);
  auto pg = pure_gap(A);
  EXPECT_DOUBLE_EQ(pg.gap, 2.0);
}

TEST(SolveZeroSum, RandomMatricesSatisfySaddleInequalities) {
  RandomStream rs(RandomDevice(2), 0);
  for (int rep = 0; rep < 30; ++rep) {
    int m = 1 + static_cast<int>(rs.uniform() * 12), n = 1 + static_cast<int>(rs.uniform() * 12);
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = 2 * rs.uniform() - 1;
    auto s = solve_zero_sum(A);
    Eigen::Map<Eigen::VectorXd> x(s.row_mix.data(), m), y(s.col_mix.data(), n);
    EXPECT_NEAR(x.sum(), 1.0, 1e-10);
    EXPECT_NEAR(y.sum(), 1.0, 1e-10);
    EXPECT_LE((A.transpose() * x).maxCoeff(), s.value + 1e-9);
    EXPECT_GE((A * y).minCoeff(), s.value - 1e-9);
  }
}

TEST(SolveScenarioGame, DominanceValue) {
  auto g = dominance_game(0.3);
  auto sol = solve_scenario_game(g);
  EXPECT_NEAR(sol.value, 0.3 * -0.5 + 0.7 * -1.0, 1e-12);
  auto pg = pure_gap(build_matrix(g));
  EXPECT_NEAR(pg.gap, 0.0, 1e-12);
}

TEST(SolveScenarioGame, AgreesWithDensePairMatrix) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = testsupport::random_game(100 + seed, 1 + seed % 3, 0.2 + 0.3 * (seed % 3));
    auto M = build_matrix(g);
    auto dense = solve_zero_sum(M.dense());
    auto sol = solve_scenario_game(g);
    EXPECT_LE(sol.gap, 1e-9);
    EXPECT_NEAR(sol.value, dense.value, 1e-9);
    expect_saddle(M, sol, 1e-9);
  }
}

TEST(SolveScenarioGame, DepthFourSaddle) {
  auto g = testsupport::random_game(77, 4, 0.8);
  auto sol = solve_scenario_game(g);
  EXPECT_LE(sol.gap, 1e-9);
  expect_saddle(build_matrix(g), sol, 1e-9);
}

TEST(MixtureToGenerating, Examples) {
  auto t = FiltrationTree::chain(3);
  auto rules = enumerate_stopping_rules(t);  // stop at 0, 1, 2, 3
  auto r = mixture_to_generating(rules, {0.5, 0.0, 0.0, 0.5}, t);
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[2], 0.5);
  EXPECT_DOUBLE_EQ(r[3], 1.0);
  auto p = mixture_to_generating(rules, {0.0, 1.0, 0.0, 0.0}, t);
  EXPECT_EQ(p.values, (std::vector<double>{0.0, 1.0, 1.0, 1.0}));
}

TEST(MixtureToGenerating, PayoffMatchesBilinearForm) {
  auto g = testsupport::random_game(5, 3, 0.5);
  auto sol = solve_scenario_game(g);
  auto M = build_matrix(g);
  double bilinear = 0.0;
  for (std::size_t t0 = 0; t0 < M.rows.size(); ++t0)
    for (std::size_t s = 0; s < M.cols.size(); ++s)
      bilinear += sol.col_mix[s] * ((1 - g.prior) * sol.mix0[t0] * M.A[0](t0, s) + g.prior * sol.mix1[t0] * M.A[1](t0, s));
  EXPECT_NEAR(expected_payoff_exact(g, sol.xi0, sol.xi1, sol.zeta), bilinear, 1e-12);
  EXPECT_NEAR(bilinear, sol.value, 1e-9);
  EXPECT_TRUE(validate_generating(sol.xi0, g.tree).ok());
  EXPECT_TRUE(validate_generating(sol.zeta, g.tree).ok());
}

TEST(SolveScenarioGame, ConstantShiftMovesValue) {
  auto g = testsupport::random_game(9, 3, 0.5);
  auto h = g;
  for (auto& p : h.payoffs)
    for (auto* v : {&p.f, &p.g, &p.h})
      for (double& x : *v) x += 0.75;
  EXPECT_NEAR(solve_scenario_game(h).value, solve_scenario_game(g).value + 0.75, 1e-9);
}
