// Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <asymdynkin/filter_simulation.hpp>
#include <asymdynkin/json_io.hpp>
#include <asymdynkin/pde_solver.hpp>
#include <asymdynkin/scenario_game.hpp>

#include "models.hpp"
#include "support.hpp"

using namespace asymdynkin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct GameCase {
  ScenarioGame game;
  ScenarioSolution sol;
};

// Shared corpus of 200 random games: depths 1..4, priors 0.2/0.5/0.8.
std::vector<GameCase>& corpus() {
  static std::vector<GameCase> games;
  return games;
}

Outcome value_existence() {
  const double priors[3] = {0.2, 0.5, 0.8};
  auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    GameCase c;
    c.game = testsupport::random_game(1000 + k, 1 + k % 4, priors[k % 3]);
    try {
      c.sol = solve_scenario_game(c.game);
      worst = std::max(worst, c.sol.gap);
    } catch (const Error&) {
      ++failures;
      continue;
    }
    corpus().push_back(std::move(c));
  }
  double secs = seconds_since(t0);
  bool pass = failures == 0 && worst <= 1e-9 && secs <= 60.0;
  return {pass, "200 games, max gap " + num(worst) + ", failures " + std::to_string(failures) + ", " + num(secs) + " s"};
}

Outcome necessary_conditions() {
  std::size_t bad = 0;
  double worst_support = 0.0;
  for (const auto& c : corpus()) {
    auto prof = profile_of(c.sol);
    auto s = best_response_values(c.game, prof);
    auto mr = martingale_report(c.game, prof, s, {}, 1e-8);
    auto sr = support_report(c.game, prof, s);
    double w = std::max({sr.max_Z, -sr.min_Y, sr.max_flat_off, sr.max_consistency});
    worst_support = std::max(worst_support, w);
    if (!mr.ok() || w > 1e-8) ++bad;
  }
  bool pass = corpus().size() == 200 && bad == 0;
  return {pass, std::to_string(corpus().size()) + " games, " + std::to_string(bad) + " with violations, worst support slack " +
                    num(worst_support)};
}

std::vector<int> interior_nodes(const FiltrationTree& tree) {
  std::vector<int> out;
  for (int n : tree.order())
    if (!tree.is_leaf(n)) out.push_back(n);
  return out;
}

bool in_subtree(const FiltrationTree& tree, int node, int top) {
  for (int m = node; m >= 0; m = tree.parent(m))
    if (m == top) return true;
  return false;
}

Outcome sufficient_conditions() {
  std::size_t certified = 0, relevant = 0, rejected = 0;
  RandomStream rs(RandomDevice(31), 0);
  for (const auto& c : corpus()) {
    const auto& g = c.game;
    auto prof = profile_of(c.sol);
    auto s = best_response_values(g, prof);
    auto cm = certify_mart(g, prof, s);
    auto cs = certify_stop(g, prof, s);
    if (cm.certified && cs.certified && std::abs(cm.value - c.sol.value) <= 1e-8 && std::abs(cs.value - c.sol.value) <= 1e-8)
      ++certified;

    auto interior = interior_nodes(g.tree);
    int top = interior[static_cast<std::size_t>(rs.uniform() * static_cast<double>(interior.size()))];
    StrategyProfile pert = prof;
    for (int n : g.tree.order())
      if (in_subtree(g.tree, n, top)) pert.zeta[n] = std::min(1.0, prof.zeta[n] + 0.1);
    auto sp = best_response_values(g, pert);
    int r = g.tree.root();
    double informed = g.weight(0) * sp.Uhat[0][r] + g.weight(1) * sp.Uhat[1][r];
    if (std::abs(informed - c.sol.value) <= 1e-8) continue;
    ++relevant;
    if (!certify_mart(g, pert, sp).certified || !certify_stop(g, pert, sp).certified) ++rejected;
  }
  double rate = relevant ? static_cast<double>(rejected) / static_cast<double>(relevant) : 1.0;
  bool pass = certified == corpus().size() && corpus().size() == 200 && rate >= 0.95;
  return {pass, std::to_string(certified) + "/" + std::to_string(corpus().size()) + " certified; perturbation rejected on " +
                    std::to_string(rejected) + "/" + std::to_string(relevant) + " games where it matters"};
}

Outcome randomization_witness() {
  auto g = game_from_json(read_json_file(std::string(ASYMDYNKIN_TEST_DATA) + "/randomization_witness.json"));
  auto M = build_matrix(g);
  Eigen::MatrixXd D = M.dense();
  auto pg = pure_gap(D);
  auto mixed = solve_zero_sum(D);
  auto sol = solve_scenario_game(g);
  bool pass = g.tree.depth() <= 3 && pg.gap >= 0.05 && mixed.gap <= 1e-9 && sol.gap <= 1e-9 &&
              std::abs(mixed.value - sol.value) <= 1e-9;
  return {pass, "depth " + std::to_string(g.tree.depth()) + ", " + std::to_string(D.rows()) + "x" + std::to_string(D.cols()) +
                    " pure gap " + num(pg.gap) + ", randomized gap " + num(std::max(mixed.gap, sol.gap))};
}

Outcome override_martingales() {
  RandomStream rs(RandomDevice(41), 0);
  double worst_M = 0.0, worst_N = 0.0;
  std::size_t games = 0;
  for (const auto& c : corpus()) {
    if (c.game.tree.depth() < 2) continue;
    if (games++ == 20) break;
    auto prof = profile_of(c.sol);
    auto s = best_response_values(c.game, prof);
    for (int k = 0; k < 50; ++k) {
      Overrides ov;
      ov.xi = std::array<GeneratingProcess, 2>{testsupport::random_process(c.game.tree, rs),
                                               testsupport::random_process(c.game.tree, rs)};
      ov.zeta = testsupport::random_process(c.game.tree, rs);
      auto rep = martingale_report(c.game, prof, s, ov);
      for (int n : c.game.tree.order()) {
        for (int i = 0; i < 2; ++i) worst_M = std::min(worst_M, rep.drift_M_override[i][n]);
        worst_N = std::max(worst_N, rep.drift_N_override[n]);
      }
    }
  }
  games = std::min<std::size_t>(games, 20);
  bool pass = games == 20 && worst_M >= -1e-8 && worst_N <= 1e-8;
  return {pass, std::to_string(games) + " games x 50 overrides, min M drift " + num(worst_M) + ", max N drift " + num(worst_N)};
}

Outcome payoff_formula() {
  RandomStream rs(RandomDevice(51), 0);
  double worst_z = 0.0, worst_enum = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto g = testsupport::random_game(2000 + k, 1 + k % 4, 0.5);
    auto xi = testsupport::random_process(g.tree, rs);
    auto zeta = testsupport::random_process(g.tree, rs);
    const auto& pay = g.payoffs[k % 2];
    double exact = expected_payoff_exact(g.tree, pay, xi, zeta);
    auto mc = expected_payoff_mc(g.tree, pay, xi, zeta, 100000, RandomDevice(60 + k));
    worst_z = std::max(worst_z, std::abs(mc.mean - exact) / std::max(mc.stderr_, 1e-300));
    worst_enum = std::max(worst_enum, std::abs(exact - testsupport::enumerated_payoff(g.tree, pay, xi, zeta)));
  }
  bool pass = worst_z <= 4.0 && worst_enum <= 1e-12;
  return {pass, "10 profiles, worst |MC - exact| " + num(worst_z) + " se, worst |exact - enumeration| " + num(worst_enum)};
}

Outcome filter_correctness() {
  auto t0 = Clock::now();
  auto m = testsupport::generic_model(0.4);
  const std::size_t n = 100000;
  SimulationOptions opt;
  opt.stride = 50;
  auto b = simulate_filter_paths(m, n, 1e-3, RandomDevice(71), opt);
  std::size_t R = b.records();
  double s = 0.0, ss = 0.0;
  bool inside = true;
  for (double p : b.psi) inside = inside && p >= 0.0 && p <= 1.0;
  for (std::size_t p = 0; p < n; ++p) {
    double v = b.psi_at(p, R - 1);
    s += v;
    ss += v * v;
  }
  double mean = s / static_cast<double>(n);
  double se = std::sqrt((ss / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  bool mart = std::abs(mean - m.pi) <= 4.0 * se;

  std::vector<double> rms;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    SimulationOptions ro;
    ro.stride = static_cast<std::size_t>(std::lround(1.0 / dt));
    rms.push_back(simulate_regime_paths(m, 2000, dt, RandomDevice(72), ro).rms_filter_gap);
  }
  double r1 = rms[0] / rms[1], r2 = rms[1] / rms[2];
  double secs = seconds_since(t0);
  bool pass = mart && inside && r1 >= 1.2 && r2 >= 1.2 && secs <= 120.0;
  return {pass, "mean psi_T " + num(mean) + " vs " + num(m.pi) + " (se " + num(se) + "), psi in [0,1]: " +
                    (inside ? "yes" : "no") + ", RMS ratios " + num(r1) + " " + num(r2) + ", " + num(secs) + " s"};
}

Outcome generator_validation() {
  auto m = testsupport::generic_model();
  auto phis = standard_test_functions();
  std::size_t ok = 0, total = 0;
  double worst = 0.0;
  for (std::size_t fi = 0; fi < phis.size(); ++fi)
    for (Mode mode : {Mode::Observation, Mode::Regime0, Mode::Regime1})
      for (auto [p, x] : {std::pair{0.3, 0.2}, std::pair{0.6, -0.5}, std::pair{0.85, 1.1}}) {
        auto c = generator_check(m, phis[fi], p, x, mode, 1000000, 1e-4, RandomDevice(81 + fi));
        ++total;
        ok += c.within(4.0);
        worst = std::max(worst, c.discrepancy / (4.0 * c.stderr_ + 1e-10));
      }
  bool pass = total == 54 && ok == total;
  return {pass, std::to_string(ok) + "/" + std::to_string(total) + " checks within 4 se, worst discrepancy " + num(worst) + " of tolerance"};
}

Outcome pde_degenerate() {
  auto t0 = Clock::now();
  auto m = testsupport::degenerate_model();
  auto g = PDEGrid::for_model(m, 201, 21, 201);
  auto s = pde_solve_system(m, g);
  double spread = 0.0;
  for (std::size_t k = 0; k < g.Mt; ++k)
    for (std::size_t i = 0; i < g.Mx; ++i) {
      double ref = s.v[g.index(k, 0, i)];
      for (std::size_t j = 1; j < g.Mp; ++j) spread = std::max(spread, std::abs(s.v[g.index(k, j, i)] - ref));
    }
  auto r = reference_dynkin_1d(m.mu0, m.sigma, m.f, m.g, m.h, m.T, m.x_lo, m.x_hi, g.Mt, g.Mx);
  double err = 0.0;
  for (std::size_t k = 0; k < g.Mt; ++k)
    for (std::size_t i = 0; i < g.Mx; ++i) err = std::max(err, std::abs(s.v[g.index(k, g.Mp / 2, i)] - r[k * g.Mx + i]));
  double secs = seconds_since(t0);
  bool pass = spread <= 1e-8 && err <= 5e-2 && s.identity_residual <= 5e-2 && secs <= 600.0;
  return {pass, "belief spread " + num(spread) + ", reference error " + num(err) + ", identity residual " +
                    num(s.identity_residual) + ", " + num(secs) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const std::string cli = ASYMDYNKIN_CLI;
  const std::string data = ASYMDYNKIN_DATA;
  auto root = fs::temp_directory_path() / "asymdynkin_acceptance";
  fs::remove_all(root);
  std::vector<fs::path> dirs{root / "a", root / "b"};
  std::vector<int> codes;
  auto game = testsupport::random_game(77, 3, 0.5);
  for (const auto& d : dirs) {
    fs::create_directories(d);
    write_json_file((d / "game.json").string(), game_to_json(game));
    std::string q = "\"" + d.string() + "\"";
    std::string model = " --model \"" + data + "/generic_model.json\" --grid 21x5x21 --dt 0.01 --paths 100 --seed 3 --out " + q;
    std::vector<std::string> cmds{
        "\"" + cli + "\" oracle --game " + q + "/game.json --out " + q,
        "\"" + cli + "\" verify --game " + q + "/game.json --equilibrium " + q + "/equilibrium.json --out " + q,
        "\"" + cli + "\" dynamics simulate" + model,
        "\"" + cli + "\" dynamics pde" + model,
        "\"" + cli + "\" dynamics extract" + model,
        "\"" + cli + "\" dynamics verify" + model,
    };
    for (const auto& c : cmds) codes.push_back(std::system((c + " > " + q + "/stdout.txt 2>&1").c_str()));
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    if (e.path().filename() == "stdout.txt") continue;
    ++files;
    if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) ++differ;
  }
  bool expected = true;
  for (const char* f : {"equilibrium.json", "report.json", "nodes.csv", "paths.csv", "surfaces.csv", "strategies.csv",
                        "verify_report.json"})
    expected = expected && fs::exists(dirs[0] / f);
  // every stage but the sampled verification must exit cleanly
  bool clean = true;
  for (std::size_t k = 0; k < codes.size(); ++k)
    if (k % 6 != 5) clean = clean && codes[k] == 0;
  bool pass = expected && clean && differ == 0;
  return {pass, std::to_string(files) + " artifacts compared, " + std::to_string(differ) + " differ" +
                    (expected ? "" : ", some artifacts missing") +
                    (clean ? "" : ", a stage failed")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria{
      {"value existence on random scenario games", value_existence},
      {"necessary conditions at oracle equilibria", necessary_conditions},
      {"sufficient conditions certify and reject perturbations", sufficient_conditions},
      {"randomization witness", randomization_witness},
      {"sub/supermartingale property under overrides", override_martingales},
      {"payoff formula equivalence", payoff_formula},
      {"filter correctness", filter_correctness},
      {"generator validation", generator_validation},
      {"degenerate PDE reduction", pde_degenerate},
      {"end-to-end determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
