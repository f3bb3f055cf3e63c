#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffusion_model.hpp"
#include "error.hpp"
#include "game_core.hpp"
#include "lp_oracle.hpp"
#include "scenario_game.hpp"

namespace asymdynkin {

using json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << text;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, "field '" + field + "': " + what);
}

inline const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) bad_field(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad_field(where.empty() ? key : where + "." + key, "missing");
  return *it;
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& field) {
  if (!j.is_array()) bad_field(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

inline json numbers_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline PayoffTriple payoff_triple(const json& j, const std::string& field) {
  PayoffTriple p;
  p.f = numbers(need(j, "f", field), field + ".f");
  p.g = numbers(need(j, "g", field), field + ".g");
  p.h = numbers(need(j, "h", field), field + ".h");
  return p;
}

inline json payoff_json(const PayoffTriple& p) {
  return json{{"f", numbers_json(p.f)}, {"g", numbers_json(p.g)}, {"h", numbers_json(p.h)}};
}

}  // namespace detail

/// Game file: {grid, tree: [{id, parent, p}], payoffs, prior}. payoffs is
/// either one {f, g, h} object (shared by both regimes) or a two-element
/// array indexed by regime.
inline ScenarioGame game_from_json(const json& j) {
  using namespace detail;
  auto grid = numbers(need(j, "grid", ""), "grid");
  const json& tj = need(j, "tree", "");
  if (!tj.is_array()) bad_field("tree", "expected an array");
  std::vector<NodeSpec> specs;
  for (std::size_t k = 0; k < tj.size(); ++k) {
    std::string f = "tree[" + std::to_string(k) + "]";
    const json& nj = tj[k];
    const json& id = need(nj, "id", f);
    const json& par = need(nj, "parent", f);
    if (!id.is_number_integer()) bad_field(f + ".id", "expected an integer");
    if (!par.is_number_integer()) bad_field(f + ".parent", "expected an integer");
    specs.push_back({id.get<int>(), par.get<int>(), number(need(nj, "p", f), f + ".p")});
  }
  const json& pj = need(j, "payoffs", "");
  std::array<PayoffTriple, 2> pay;
  if (pj.is_array()) {
    if (pj.size() != 2) bad_field("payoffs", "expected two regimes");
    pay[0] = payoff_triple(pj[0], "payoffs[0]");
    pay[1] = payoff_triple(pj[1], "payoffs[1]");
  } else {
    pay[0] = pay[1] = payoff_triple(pj, "payoffs");
  }
  double prior = number(need(j, "prior", ""), "prior");
  ScenarioGame g{TimeGrid(grid), FiltrationTree(specs), pay, prior};
  g.validate();
  return g;
}

inline json game_to_json(const ScenarioGame& g) {
  json j;
  j["grid"] = detail::numbers_json(g.grid.points());
  json t = json::array();
  for (const auto& s : g.tree.specs()) t.push_back(json{{"id", s.id}, {"parent", s.parent}, {"p", s.p}});
  j["tree"] = t;
  j["payoffs"] = json::array({detail::payoff_json(g.payoffs[0]), detail::payoff_json(g.payoffs[1])});
  j["prior"] = g.prior;
  return j;
}

/// Equilibrium file: {grid, value, gap, xi0, xi1, zeta, surfaces?}.
struct EquilibriumFile {
  std::vector<double> grid;
  double value = 0.0;
  double gap = 0.0;
  StrategyProfile profile;
  bool has_surfaces = false;
  ValueSurfaces surfaces;  // normalized U0, U1, V when present
};

inline json equilibrium_to_json(const ScenarioGame& game, const ScenarioSolution& sol, const ValueSurfaces* s = nullptr) {
  json j;
  j["grid"] = detail::numbers_json(game.grid.points());
  j["value"] = sol.value;
  j["gap"] = sol.gap;
  j["xi0"] = detail::numbers_json(sol.xi0.values);
  j["xi1"] = detail::numbers_json(sol.xi1.values);
  j["zeta"] = detail::numbers_json(sol.zeta.values);
  if (s)
    j["surfaces"] = json{{"U0", detail::numbers_json(s->U[0])},
                         {"U1", detail::numbers_json(s->U[1])},
                         {"V", detail::numbers_json(s->V)},
                         {"p", detail::numbers_json(s->p)}};
  return j;
}

inline EquilibriumFile equilibrium_from_json(const json& j) {
  using namespace detail;
  EquilibriumFile e;
  e.grid = numbers(need(j, "grid", ""), "grid");
  e.value = number(need(j, "value", ""), "value");
  if (j.contains("gap")) e.gap = number(j["gap"], "gap");
  e.profile.xi0.values = numbers(need(j, "xi0", ""), "xi0");
  e.profile.xi1.values = numbers(need(j, "xi1", ""), "xi1");
  e.profile.zeta.values = numbers(need(j, "zeta", ""), "zeta");
  if (j.contains("surfaces")) {
    const json& s = j["surfaces"];
    e.has_surfaces = true;
    e.surfaces.U[0] = numbers(need(s, "U0", "surfaces"), "surfaces.U0");
    e.surfaces.U[1] = numbers(need(s, "U1", "surfaces"), "surfaces.U1");
    e.surfaces.V = numbers(need(s, "V", "surfaces"), "surfaces.V");
  }
  return e;
}

/// Checks that an equilibrium file belongs to the game.
inline void check_equilibrium(const ScenarioGame& game, const EquilibriumFile& e) {
  const auto& pts = game.grid.points();
  if (e.grid.size() != pts.size()) throw Error(ErrorCode::ShapeMismatch, "equilibrium grid has a different number of points");
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (e.grid[k] != pts[k])
      throw Error(ErrorCode::ShapeMismatch, "equilibrium grid differs from the game grid at index " + std::to_string(k) +
                                                (k + 1 == pts.size() ? " (horizon mismatch)" : ""));
  check_profile(game, e.profile);
  std::size_t n = game.tree.size();
  if (e.has_surfaces && (e.surfaces.U[0].size() != n || e.surfaces.U[1].size() != n || e.surfaces.V.size() != n))
    throw Error(ErrorCode::ShapeMismatch, "equilibrium surfaces do not match the tree");
}

/// Model file: {mu0, mu1, sigma, f, g, h, x0, pi, T, domain: [lo, hi], sigma_min?};
/// functions are expressions in x (and t for payoffs) or numbers.
inline DiffusionModel model_from_json(const json& j) {
  using namespace detail;
  auto expr = [&](const char* key) {
    const json& e = need(j, key, "");
    if (e.is_number()) return Expression(e.get<double>());
    if (!e.is_string()) bad_field(key, "expected an expression string or a number");
    try {
      return Expression(e.get<std::string>());
    } catch (const Error& err) {
      bad_field(key, err.what());
    }
  };
  DiffusionModel m;
  m.mu0 = expr("mu0");
  m.mu1 = expr("mu1");
  m.sigma = expr("sigma");
  m.f = expr("f");
  m.g = expr("g");
  m.h = expr("h");
  m.x0 = number(need(j, "x0", ""), "x0");
  m.pi = number(need(j, "pi", ""), "pi");
  m.T = number(need(j, "T", ""), "T");
  auto dom = numbers(need(j, "domain", ""), "domain");
  if (dom.size() != 2) bad_field("domain", "expected [lo, hi]");
  m.x_lo = dom[0];
  m.x_hi = dom[1];
  if (j.contains("sigma_min")) m.sigma_min = number(j["sigma_min"], "sigma_min");
  for (const auto* e : {&m.mu0, &m.mu1, &m.sigma})
    if (e->depends_on_t()) throw Error(ErrorCode::ParseError, "field 'mu0/mu1/sigma': dynamics must not depend on t");
  m.validate();
  return m;
}

inline json model_to_json(const DiffusionModel& m) {
  return json{{"mu0", m.mu0.source()}, {"mu1", m.mu1.source()}, {"sigma", m.sigma.source()},
              {"f", m.f.source()},     {"g", m.g.source()},     {"h", m.h.source()},
              {"x0", m.x0},            {"pi", m.pi},            {"T", m.T},
              {"domain", {m.x_lo, m.x_hi}}, {"sigma_min", m.sigma_min}};
}

}  // namespace asymdynkin
