#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filter_simulation.hpp"
#include "json_io.hpp"
#include "lp_oracle.hpp"
#include "pde_solver.hpp"
#include "scenario_game.hpp"
#include "strategy_extraction.hpp"

namespace asymdynkin {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitRejected = 1, kExitInput = 2, kExitCap = 3, kExitConvergence = 4 };

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::EnumerationCapExceeded: return kExitCap;
    case ErrorCode::NoConvergence:
    case ErrorCode::NumericalFailure:
    case ErrorCode::CFLViolation: return kExitConvergence;
    default: return kExitInput;
  }
}

struct RunConfig {
  std::string command;
  std::string game, equilibrium, model, out = ".";
  std::uint64_t seed = 1;
  double tol = kDefaultTol;
  std::size_t cap = kDefaultRuleCap;
  std::string grid = "101x21x101";
  double dt = 1e-3;
  std::size_t paths = 1000;
  std::size_t stride = 10;
  double set_tol = 1e-4;
  double alpha = 0.01;
  double identity_tol = 1e-2;
  double bias_tol = 5e-3;
  std::size_t budget = 200;
};

namespace detail {

inline PDEGrid parse_grid(const std::string& s, const DiffusionModel& m) {
  std::size_t a = 0, b = 0, c = 0;
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  if (!(in >> a >> x1 >> b >> x2 >> c) || x1 != 'x' || x2 != 'x' || in.peek() != EOF)
    throw Error(ErrorCode::ParseError, "field 'grid': expected MtxMpixMx, got '" + s + "'");
  return PDEGrid::for_model(m, a, b, c);
}

inline std::string grid_text(const PDEGrid& g) {
  return std::to_string(g.Mt) + "x" + std::to_string(g.Mp) + "x" + std::to_string(g.Mx);
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void append_row(std::string& buf, std::initializer_list<double> vals) {
  bool first = true;
  for (double v : vals) {
    if (!first) buf += ',';
    buf += fmt(v);
    first = false;
  }
  buf += '\n';
}

inline json meta(const RunConfig& c, std::optional<std::string> grid = std::nullopt) {
  json j{{"command", c.command}, {"seed", c.seed}};
  if (c.command.rfind("dynamics", 0) == 0) j["dt"] = c.dt;
  if (grid) j["grid"] = *grid;
  return j;
}

inline std::string csv_meta(const RunConfig& c, const std::string& grid) {
  return "# command=" + c.command + " seed=" + std::to_string(c.seed) + " dt=" + fmt(c.dt) + " grid=" + grid + "\n";
}

inline int cmd_oracle(const RunConfig& c, std::ostream& out) {
  auto game = game_from_json(read_json_file(c.game));
  auto sol = solve_scenario_game(game, c.cap);
  auto surf = best_response_values(game, profile_of(sol));
  json j = equilibrium_to_json(game, sol, &surf);
  j["meta"] = meta(c);
  std::filesystem::create_directories(c.out);
  write_json_file(join(c.out, "equilibrium.json"), j);
  out << "value " << fmt(sol.value) << " gap " << fmt(sol.gap) << " rules " << sol.rules.size() << "\n";
  return kExitOk;
}

inline json issues_json(const std::vector<NodeIssue>& v) {
  json a = json::array();
  for (const auto& i : v) a.push_back(json{{"condition", i.condition}, {"node", i.node}, {"residual", i.residual}});
  return a;
}

inline json certificate_json(const Certificate& c) {
  return json{{"certified", c.certified}, {"value", c.value}, {"tol", c.tol}, {"violations", issues_json(c.violations)}};
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
  auto game = game_from_json(read_json_file(c.game));
  auto eq = equilibrium_from_json(read_json_file(c.equilibrium));
  check_equilibrium(game, eq);
  const auto& prof = eq.profile;
  auto report_vg = [&](const GeneratingProcess& g, const char* name) {
    auto r = validate_generating(g, game.tree);
    if (!r.ok()) throw Error(ErrorCode::NotMonotone, std::string("equilibrium field '") + name + "' is not a generating process");
  };
  report_vg(prof.xi0, "xi0");
  report_vg(prof.xi1, "xi1");
  report_vg(prof.zeta, "zeta");

  auto br = best_response_values(game, prof);
  ValueSurfaces cand = br;
  if (eq.has_surfaces) {
    cand.U = eq.surfaces.U;
    cand.V = eq.surfaces.V;
  }
  auto mr = martingale_report(game, prof, br, {}, c.tol);
  auto sr = support_report(game, prof, br);
  auto cm = certify_mart(game, prof, cand, c.tol);
  auto cs = certify_stop(game, prof, br, c.tol, c.cap);

  json j;
  j["meta"] = meta(c);
  bool certified = cm.certified && cs.certified;
  j["certified"] = certified;
  j["value"] = cm.value;
  j["martingale"] = json{{"drift_M0", numbers_json(mr.drift_M[0])},
                         {"drift_M1", numbers_json(mr.drift_M[1])},
                         {"drift_N", numbers_json(mr.drift_N)},
                         {"issues", issues_json(mr.issues)}};
  json gamma = json::array();
  for (char g : sr.in_gamma2) gamma.push_back(g != 0);
  j["support"] = json{{"Z0", numbers_json(sr.Z[0])},
                      {"Z1", numbers_json(sr.Z[1])},
                      {"Y", numbers_json(sr.Y)},
                      {"flat_off_informed", numbers_json(sr.flat_off_informed)},
                      {"flat_off_uninformed", numbers_json(sr.flat_off_uninformed)},
                      {"consistency", numbers_json(sr.consistency)},
                      {"in_gamma2", gamma},
                      {"simultaneous_jumps", sr.simultaneous_jumps},
                      {"max_Z", sr.max_Z},
                      {"min_Y", sr.min_Y},
                      {"max_flat_off", sr.max_flat_off},
                      {"max_consistency", sr.max_consistency}};
  std::vector<double> ex;
  for (std::size_t n = 0; n < game.tree.size(); ++n) ex.push_back(ex_ante_check(game, prof, br, static_cast<int>(n)).residual);
  j["ex_ante_residual"] = numbers_json(ex);
  j["certify_mart"] = certificate_json(cm);
  j["certify_stop"] = certificate_json(cs);

  std::filesystem::create_directories(c.out);
  write_json_file(join(c.out, "report.json"), j);
  std::string csv = "node,p,U0,U1,V,Z0,Z1,Y\n";
  for (std::size_t n = 0; n < game.tree.size(); ++n)
    append_row(csv, {static_cast<double>(n), br.p[n], br.U[0][n], br.U[1][n], br.V[n], sr.Z[0][n], sr.Z[1][n], sr.Y[n]});
  write_text_file(join(c.out, "nodes.csv"), csv);

  if (certified) {
    out << "certified value " << fmt(cm.value) << "\n";
    return kExitOk;
  }
  out << "rejected\n";
  out << "max flat-off residual " << fmt(sr.max_flat_off) << "\n";
  out << "certifier,condition,node,residual\n";
  for (const auto& v : cm.violations) out << "mart," << v.condition << "," << v.node << "," << fmt(v.residual) << "\n";
  for (const auto& v : cs.violations) out << "stop," << v.condition << "," << v.node << "," << fmt(v.residual) << "\n";
  return kExitRejected;
}

inline std::shared_ptr<const PDESurfaces> solve_for(const RunConfig& c, const DiffusionModel& m, const PDEGrid& g) {
  PDEOptions opt;
  opt.budget = c.budget;
  return std::make_shared<const PDESurfaces>(pde_solve_system(m, g, opt));
}

inline int cmd_dynamics(const RunConfig& c, const std::string& sub, std::ostream& out) {
  auto m = model_from_json(read_json_file(c.model));
  auto grid = parse_grid(c.grid, m);
  const std::string gtext = grid_text(grid);
  std::filesystem::create_directories(c.out);
  RandomDevice dev(c.seed);
  SimulationOptions so;
  so.stride = c.stride;

  if (sub == "simulate") {
    auto obs = simulate_filter_paths(m, c.paths, c.dt, dev, so);
    so.stream_offset = std::uint64_t{1} << 40;
    auto reg = simulate_regime_paths(m, c.paths, c.dt, dev, so);
    std::string a = csv_meta(c, gtext) + "path_id,t,X,psi\n", b = csv_meta(c, gtext) + "path_id,t,X,psi,J\n";
    std::size_t exited = 0;
    for (std::size_t p = 0; p < c.paths; ++p) {
      exited += obs.exited[p];
      for (std::size_t r = 0; r < obs.records(); ++r) {
        append_row(a, {static_cast<double>(p), obs.times[r], obs.x_at(p, r), obs.psi_at(p, r)});
        append_row(b, {static_cast<double>(p), reg.times[r], reg.x_at(p, r), reg.psi_at(p, r), static_cast<double>(reg.J[p])});
      }
    }
    write_text_file(join(c.out, "paths.csv"), a);
    write_text_file(join(c.out, "regime_paths.csv"), b);
    json s{{"meta", meta(c, gtext)},
           {"paths", c.paths},
           {"exited", exited},
           {"max_clamp", obs.max_clamp},
           {"rms_filter_gap", reg.rms_filter_gap}};
    write_json_file(join(c.out, "simulate_summary.json"), s);
    out << "simulated " << c.paths << " paths, " << exited << " left the domain\n";
    return kExitOk;
  }

  std::shared_ptr<const PDESurfaces> surf;
  try {
    surf = solve_for(c, m, grid);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoConvergence)
      write_json_file(join(c.out, "convergence_failure.json"), json{{"meta", meta(c, gtext)}, {"error", e.what()}});
    throw;
  }
  if (sub == "pde") {
    std::string csv = csv_meta(c, gtext) + "t,pi,x,u0,u1,v,in_S0,in_S1,in_S\n";
    for (std::size_t k = 0; k < grid.Mt; ++k)
      for (std::size_t j = 0; j < grid.Mp; ++j)
        for (std::size_t i = 0; i < grid.Mx; ++i) {
          std::size_t n = grid.index(k, j, i);
          append_row(csv, {grid.t(k), grid.p(j), grid.x(i), surf->u0[n], surf->u1[n], surf->v[n],
                           static_cast<double>(surf->S0[n]), static_cast<double>(surf->S1[n]), static_cast<double>(surf->S[n])});
        }
    write_text_file(join(c.out, "surfaces.csv"), csv);
    json s{{"meta", meta(c, gtext)},
           {"identity_residual", surf->identity_residual},
           {"max_passes", surf->max_passes},
           {"oscillating_slices", surf->oscillating_slices},
           {"v0", surf->interp(2, 0.0, m.pi, m.x0)}};
    write_json_file(join(c.out, "pde_summary.json"), s);
    out << "v(0, pi, x0) " << fmt(surf->interp(2, 0.0, m.pi, m.x0)) << " identity residual " << fmt(surf->identity_residual)
        << "\n";
    return kExitOk;
  }

  auto strat = extract_strategies(surf, m, c.dt, c.set_tol);
  if (sub == "extract") {
    SimulationOptions full;
    auto obs = simulate_filter_paths(m, c.paths, c.dt, dev, full);
    std::string csv = csv_meta(c, gtext) + "path_id,t,X,psi,p,xi0,xi1,zeta\n";
    double misplaced = 0.0, excess = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, c.stride);
    for (std::size_t p = 0; p < c.paths; ++p) {
      auto tr = strat.evaluate(&obs.X[p * obs.records()], &obs.psi[p * obs.records()]);
      misplaced = std::max({misplaced, tr.misplaced_mass[0], tr.misplaced_mass[1]});
      excess = std::max(excess, tr.reflection_excess);
      for (std::size_t k = 0; k < obs.records(); ++k)
        if (k % stride == 0 || k + 1 == obs.records())
          append_row(csv, {static_cast<double>(p), obs.times[k], obs.x_at(p, k), obs.psi_at(p, k), tr.p_post[k], tr.xi0[k],
                           tr.xi1[k], tr.zeta[k]});
    }
    write_text_file(join(c.out, "strategies.csv"), csv);
    json s{{"meta", meta(c, gtext)}, {"max_misplaced_mass", misplaced}, {"max_reflection_excess", excess}};
    write_json_file(join(c.out, "extract_summary.json"), s);
    out << "extracted strategies on " << c.paths << " paths\n";
    return kExitOk;
  }

  VerifyOptions vo;
  vo.paths = c.paths;
  vo.dt = c.dt;
  vo.seed = c.seed;
  vo.alpha = c.alpha;
  vo.tol = c.set_tol;
  vo.identity_tol = c.identity_tol;
  vo.bias_tol = c.bias_tol;
  auto rep = mc_verify_sufficiency(m, strat, vo);
  json conds = json::array();
  for (const auto& r : rep.conditions)
    conds.push_back(json{{"condition", r.name},
                         {"pass", r.pass},
                         {"statistic", r.statistic},
                         {"ci", {r.ci_lo, r.ci_hi}},
                         {"threshold", r.threshold},
                         {"detail", r.detail}});
  json s{{"meta", meta(c, gtext)},
         {"paths", rep.paths},
         {"all_pass", rep.all_pass()},
         {"conditions", conds},
         {"max_misplaced_mass", rep.max_misplaced_mass},
         {"max_reflection_excess", rep.max_reflection_excess},
         {"identity_residual", surf->identity_residual}};
  write_json_file(join(c.out, "verify_report.json"), s);
  for (const auto& r : rep.conditions) out << r.name << " " << (r.pass ? "pass" : "fail") << " " << fmt(r.statistic) << "\n";
  return rep.all_pass() ? kExitOk : kExitRejected;
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dynkin stopping games with asymmetric information"};
  app.require_subcommand(1);
  RunConfig c;

  auto* oracle = app.add_subcommand("oracle", "solve a scenario game exactly");
  oracle->add_option("--game", c.game, "game JSON")->required();
  oracle->add_option("--out", c.out, "output directory");
  oracle->add_option("--cap", c.cap, "maximum number of pure stopping rules");
  oracle->add_option("--seed", c.seed, "recorded seed");

  auto* verify = app.add_subcommand("verify", "check and certify an equilibrium of a scenario game");
  verify->add_option("--game", c.game, "game JSON")->required();
  verify->add_option("--equilibrium", c.equilibrium, "equilibrium JSON")->required();
  verify->add_option("--tol", c.tol, "certification tolerance");
  verify->add_option("--out", c.out, "output directory");
  verify->add_option("--cap", c.cap, "maximum number of pure stopping rules");
  verify->add_option("--seed", c.seed, "recorded seed");

  auto* dyn = app.add_subcommand("dynamics", "diffusion model pipeline");
  dyn->require_subcommand(1);
  std::string sub;
  for (const char* name : {"simulate", "pde", "extract", "verify"}) {
    auto* s = dyn->add_subcommand(name);
    s->add_option("--model", c.model, "model JSON")->required();
    s->add_option("--grid", c.grid, "PDE grid MtxMpixMx");
    s->add_option("--dt", c.dt, "simulation step");
    s->add_option("--paths", c.paths, "number of simulated paths");
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--out", c.out, "output directory");
    s->add_option("--stride", c.stride, "record every k-th step in path dumps");
    s->add_option("--set-tol", c.set_tol, "tolerance for stopping-set membership and obstacle checks");
    s->add_option("--alpha", c.alpha, "allowed fraction of obstacle violations");
    s->add_option("--identity-tol", c.identity_tol, "tolerance of the root identity");
    s->add_option("--bias-tol", c.bias_tol, "discretization allowance for martingale increments");
    s->add_option("--budget", c.budget, "policy-iteration passes per time slice");
    s->callback([&sub, name] { sub = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (oracle->parsed()) {
      c.command = "oracle";
      return detail::cmd_oracle(c, out);
    }
    if (verify->parsed()) {
      c.command = "verify";
      return detail::cmd_verify(c, out);
    }
    c.command = "dynamics " + sub;
    return detail::cmd_dynamics(c, sub, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace asymdynkin
