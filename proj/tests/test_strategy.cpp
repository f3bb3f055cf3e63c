#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include <asymdynkin/game_core.hpp>
#include <asymdynkin/strategy_extraction.hpp>

#include "models.hpp"

using namespace asymdynkin;
using testsupport::degenerate_model;
using testsupport::generic_model;

namespace {

std::shared_ptr<const PDESurfaces> solve(const DiffusionModel& m, std::size_t Mt, std::size_t Mp, std::size_t Mx) {
  return std::make_shared<const PDESurfaces>(pde_solve_system(m, PDEGrid::for_model(m, Mt, Mp, Mx)));
}

// uninformed player's payoff falls over time, so stopping is attractive early
DiffusionModel decaying_model() {
  auto m = generic_model();
  m.g = Expression("tanh(x) - 0.5*t");
  m.h = Expression("tanh(x) - 0.5*t + 0.1");
  m.f = Expression("tanh(x) - 0.5*t + 0.3");
  return m;
}

VerifyOptions small_run(std::uint64_t seed) {
  VerifyOptions o;
  o.paths = 1500;
  o.dt = 4e-3;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(ExtractStrategies, TrajectoriesAreGeneratingProcesses) {
  auto m = generic_model();
  auto s = extract_strategies(solve(m, 41, 9, 41), m, 0.01);
  auto b = simulate_filter_paths(m, 200, 0.01, RandomDevice(3));
  auto tree = FiltrationTree::chain(static_cast<int>(s.steps()));
  for (std::size_t p = 0; p < b.paths; ++p) {
    auto tr = s.evaluate(&b.X[p * b.records()], &b.psi[p * b.records()]);
    for (const auto* lv : {&tr.xi0, &tr.xi1, &tr.zeta}) {
      GeneratingProcess g{*lv};
      EXPECT_TRUE(validate_generating(g, tree).ok());
    }
    for (double q : tr.p_post) {
      EXPECT_GE(q, 0.0);
      EXPECT_LE(q, 1.0);
    }
  }
}

TEST(ExtractStrategies, InitialPointInUninformedSetStopsAtZero) {
  auto m = decaying_model();
  auto sur = solve(m, 41, 9, 41);
  auto s = extract_strategies(sur, m, 0.01);
  ASSERT_TRUE(s.in_uninformed_set(0.0, m.pi, m.x0));
  auto b = simulate_filter_paths(m, 20, 0.01, RandomDevice(4));
  for (std::size_t p = 0; p < b.paths; ++p) {
    auto tr = s.evaluate(&b.X[p * b.records()], &b.psi[p * b.records()]);
    EXPECT_EQ(tr.zeta[0], 1.0);
  }
}

TEST(ExtractStrategies, SymmetricModelGivesIdenticalIncarnations) {
  auto m = degenerate_model();
  m.f = Expression("tanh(x) + 0.12");
  auto s = extract_strategies(solve(m, 41, 7, 41), m, 0.01);
  auto b = simulate_filter_paths(m, 100, 0.01, RandomDevice(5));
  double acted = 0.0;
  for (std::size_t p = 0; p < b.paths; ++p) {
    auto tr = s.evaluate(&b.X[p * b.records()], &b.psi[p * b.records()]);
    EXPECT_EQ(tr.xi0, tr.xi1);
    acted += tr.xi0[tr.xi0.size() - 2];
  }
  EXPECT_GT(acted, 0.0);
}

TEST(ExtractStrategies, FlatOffAndReflectionOnGenericModel) {
  auto m = generic_model();
  auto sur = solve(m, 41, 9, 41);
  auto s = extract_strategies(sur, m, 0.01);
  auto b = simulate_regime_paths(m, 300, 0.01, RandomDevice(6));
  double pushed = 0.0;
  for (std::size_t p = 0; p < b.paths; ++p) {
    auto tr = s.evaluate(&b.X[p * b.records()], &b.psi[p * b.records()]);
    EXPECT_LE(tr.misplaced_mass[0], 1e-6);
    EXPECT_LE(tr.misplaced_mass[1], 1e-6);
    EXPECT_LE(tr.reflection_excess, sur->grid.dp());
    pushed += tr.xi1[tr.xi1.size() - 2] + tr.xi0[tr.xi0.size() - 2];
  }
  EXPECT_GT(pushed, 0.0);
}

TEST(McVerify, DegenerateModelPasses) {
  auto m = degenerate_model();
  auto s = extract_strategies(solve(m, 51, 5, 81), m, 4e-3);
  auto r = mc_verify_sufficiency(m, s, small_run(7));
  ASSERT_EQ(r.conditions.size(), 5u);
  for (const auto& c : r.conditions) EXPECT_TRUE(c.pass) << c.name << " " << c.statistic << " " << c.detail;
}

TEST(McVerify, ScaledValueBreaksRootIdentity) {
  auto m = degenerate_model();
  auto sur = pde_solve_system(m, PDEGrid::for_model(m, 51, 5, 81));
  for (double& v : sur.v) v *= 1.1;
  auto shared = std::make_shared<const PDESurfaces>(std::move(sur));
  ASSERT_GT(std::abs(shared->interp(2, 0.0, m.pi, m.x0)), 0.1);
  auto s = extract_strategies(shared, m, 4e-3);
  auto opt = small_run(8);
  opt.paths = 200;
  auto r = mc_verify_sufficiency(m, s, opt);
  EXPECT_FALSE(r.conditions[4].pass);
}

TEST(McVerify, NeverStoppingUninformedPlayerIsRejected) {
  auto m = decaying_model();
  auto s = extract_strategies(solve(m, 51, 9, 61), m, 4e-3);
  s.uninformed_never_stops = true;
  auto r = mc_verify_sufficiency(m, s, small_run(9));
  EXPECT_FALSE(r.all_pass());
  EXPECT_FALSE(r.conditions[0].pass);
}

TEST(McVerify, Deterministic) {
  auto m = generic_model();
  auto s = extract_strategies(solve(m, 21, 5, 21), m, 0.01);
  auto opt = small_run(10);
  opt.paths = 300;
  opt.dt = 0.01;
  auto a = mc_verify_sufficiency(m, s, opt);
  auto b = mc_verify_sufficiency(m, s, opt);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(a.conditions[c].statistic, b.conditions[c].statistic);
}
