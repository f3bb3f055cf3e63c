#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "game_core.hpp"
#include "lp_oracle.hpp"

namespace asymdynkin {

inline constexpr double kDefaultTol = 1e-8;

struct Belief {
  double p = 0.0;
  bool degenerate = false;
};

/// Posterior weight on regime 1 given that neither incarnation has stopped.
inline Belief belief_update(double prior, double xi0_pre, double xi1_pre) {
  double a = prior * (1.0 - xi1_pre);
  double b = (1.0 - prior) * (1.0 - xi0_pre);
  double d = a + b;
  if (d <= 0.0) return {prior, true};
  return {a / d, false};
}

struct StrategyProfile {
  GeneratingProcess xi0, xi1, zeta;

  const GeneratingProcess& xi(int i) const { return i == 1 ? xi1 : xi0; }
  GeneratingProcess& xi(int i) { return i == 1 ? xi1 : xi0; }
};

inline void check_profile(const ScenarioGame& game, const StrategyProfile& prof) {
  std::size_t n = game.tree.size();
  if (prof.xi0.size() != n || prof.xi1.size() != n || prof.zeta.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "strategy profile does not match the tree");
}

/// Value surfaces. Hat arrays are un-normalized; U, V are normalized by the
/// survival weights.
struct ValueSurfaces {
  std::array<std::vector<double>, 2> Uhat, U;
  std::vector<double> Vhat, V;
  std::vector<double> p;
  std::vector<char> belief_degenerate;             // both incarnations have stopped
  std::array<std::vector<char>, 2> informed_stop;  // stopping strictly better
  std::vector<char> uninformed_stop;
};

namespace detail {

inline double children_mean(const FiltrationTree& tree, const std::vector<double>& x, int n) {
  double s = 0.0;
  for (int c : tree.children(n)) s += tree.prob(c) * x[c];
  return s;
}

}  // namespace detail

/// Survival-weighted normalization. Where the survival weight vanishes the
/// value of the truncated (immediately stopping) opponent is used.
inline void normalize_surfaces(const ScenarioGame& game, const StrategyProfile& prof, ValueSurfaces& s) {
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  s.p.assign(N, game.prior);
  s.belief_degenerate.assign(N, 0);
  s.V.assign(N, 0.0);
  for (int i = 0; i < 2; ++i) s.U[i].assign(N, 0.0);
  for (int n : tree.order()) {
    bool leaf = tree.is_leaf(n);
    double zeta_pre = prof.zeta.pre(tree, n);
    for (int i = 0; i < 2; ++i) {
      const auto& pay = game.payoffs[i];
      double surv = 1.0 - zeta_pre;
      s.U[i][n] = surv > 0.0 ? s.Uhat[i][n] / surv : (leaf ? pay.h[n] : pay.g[n]);
    }
    double x0 = prof.xi0.pre(tree, n), x1 = prof.xi1.pre(tree, n);
    Belief b = belief_update(game.prior, x0, x1);
    s.p[n] = b.p;
    s.belief_degenerate[n] = b.degenerate;
    double w = game.weight(0) * (1.0 - x0) + game.weight(1) * (1.0 - x1);
    if (w > 0.0) {
      s.V[n] = s.Vhat[n] / w;
    } else {
      const auto& a = leaf ? game.payoffs[0].h : game.payoffs[0].f;
      const auto& c = leaf ? game.payoffs[1].h : game.payoffs[1].f;
      s.V[n] = game.weight(0) * a[n] + game.weight(1) * c[n];
    }
  }
}

/// Best-response values by backward induction; exact ties prefer continuing.
inline ValueSurfaces best_response_values(const ScenarioGame& game, const StrategyProfile& prof) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  ValueSurfaces s;
  for (int i = 0; i < 2; ++i) {
    s.Uhat[i].assign(N, 0.0);
    s.informed_stop[i].assign(N, 0);
  }
  s.Vhat.assign(N, 0.0);
  s.uninformed_stop.assign(N, 0);
  const auto& order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int n = *it;
    double dz = prof.zeta.increment(tree, n);
    double vstop = 0.0, vflow = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto& pay = game.payoffs[i];
      const auto& xi = prof.xi(i);
      double dx = xi.increment(tree, n);
      double pw = game.weight(i);
      vstop += pw * (pay.g[n] * (1.0 - xi[n]) + pay.h[n] * dx);
      vflow += pw * pay.f[n] * dx;
      if (tree.is_leaf(n)) {
        s.Uhat[i][n] = pay.h[n] * dz;
        s.informed_stop[i][n] = 1;
        continue;
      }
      double stop = pay.f[n] * (1.0 - prof.zeta[n]) + pay.h[n] * dz;
      double cont = pay.g[n] * dz + detail::children_mean(tree, s.Uhat[i], n);
      s.informed_stop[i][n] = stop < cont;
      s.Uhat[i][n] = std::min(stop, cont);
    }
    if (tree.is_leaf(n)) {
      double v = 0.0;
      for (int i = 0; i < 2; ++i) v += game.weight(i) * game.payoffs[i].h[n] * prof.xi(i).increment(tree, n);
      s.Vhat[n] = v;
      s.uninformed_stop[n] = 1;
      continue;
    }
    double cont = vflow + detail::children_mean(tree, s.Vhat, n);
    s.uninformed_stop[n] = vstop > cont;
    s.Vhat[n] = std::max(vstop, cont);
  }
  normalize_surfaces(game, prof, s);
  return s;
}

/// Hat values implied by normalized candidate surfaces.
inline void hats_from_normalized(const ScenarioGame& game, const StrategyProfile& prof, ValueSurfaces& s) {
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  s.Vhat.assign(N, 0.0);
  for (int i = 0; i < 2; ++i) s.Uhat[i].assign(N, 0.0);
  for (int n : tree.order()) {
    double surv = 1.0 - prof.zeta.pre(tree, n);
    for (int i = 0; i < 2; ++i) s.Uhat[i][n] = surv * s.U[i][n];
    double w = game.weight(0) * (1.0 - prof.xi0.pre(tree, n)) + game.weight(1) * (1.0 - prof.xi1.pre(tree, n));
    s.Vhat[n] = w * s.V[n];
  }
}

struct NodeIssue {
  std::string condition;
  int node = -1;
  double residual = 0.0;
};

struct MartingaleReport {
  std::array<std::vector<double>, 2> drift_M;  // one-step drift of M^{0;i}, 0 at leaves
  std::vector<double> drift_N;
  std::array<std::vector<double>, 2> drift_M_override;
  std::vector<double> drift_N_override;
  bool has_xi_override = false;
  bool has_zeta_override = false;
  std::vector<NodeIssue> issues;
  double tol = kDefaultTol;

  bool ok() const noexcept { return issues.empty(); }
};

struct Overrides {
  std::optional<std::array<GeneratingProcess, 2>> xi;  // per regime
  std::optional<GeneratingProcess> zeta;
};

inline MartingaleReport martingale_report(const ScenarioGame& game, const StrategyProfile& prof, const ValueSurfaces& s,
                                          const Overrides& ov = {}, double tol = kDefaultTol) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  if (s.Vhat.size() != N || s.Uhat[0].size() != N || s.Uhat[1].size() != N)
    throw Error(ErrorCode::ShapeMismatch, "surfaces do not match the tree");
  MartingaleReport rep;
  rep.tol = tol;

  // Accumulated flows: acc[n] = sum over strict ancestors.
  std::array<std::vector<double>, 2> accM;
  std::vector<double> accN(N, 0.0);
  std::array<std::vector<double>, 2> M;
  std::vector<double> Nproc(N, 0.0);
  for (int i = 0; i < 2; ++i) {
    accM[i].assign(N, 0.0);
    M[i].assign(N, 0.0);
  }
  for (int n : tree.order()) {
    int par = tree.parent(n);
    for (int i = 0; i < 2; ++i) {
      if (par >= 0) accM[i][n] = accM[i][par] + game.payoffs[i].g[par] * prof.zeta.increment(tree, par);
      M[i][n] = accM[i][n] + s.Uhat[i][n];
    }
    if (par >= 0) {
      double flow = 0.0;
      for (int i = 0; i < 2; ++i) flow += game.weight(i) * game.payoffs[i].f[par] * prof.xi(i).increment(tree, par);
      accN[n] = accN[par] + flow;
    }
    Nproc[n] = accN[n] + s.Vhat[n];
  }
  auto drift_of = [&](const std::vector<double>& X) {
    std::vector<double> d(N, 0.0);
    for (int n : tree.order())
      if (!tree.is_leaf(n)) d[n] = detail::children_mean(tree, X, n) - X[n];
    return d;
  };
  for (int i = 0; i < 2; ++i) {
    rep.drift_M[i] = drift_of(M[i]);
    std::string name = "M0;" + std::to_string(i);
    for (int n : tree.order()) {
      if (tree.is_leaf(n)) continue;
      double d = rep.drift_M[i][n];
      if (d < -tol) rep.issues.push_back({name + " submartingale", n, -d});
      if (prof.xi(i)[n] < 1.0 && std::abs(d) > tol) rep.issues.push_back({name + " martingale before stopping", n, std::abs(d)});
    }
  }
  rep.drift_N = drift_of(Nproc);
  for (int n : tree.order()) {
    if (tree.is_leaf(n)) continue;
    double d = rep.drift_N[n];
    if (d > tol) rep.issues.push_back({"N0 supermartingale", n, d});
    if (prof.zeta[n] < 1.0 && std::abs(d) > tol) rep.issues.push_back({"N0 martingale before stopping", n, std::abs(d)});
  }

  if (ov.xi) {
    rep.has_xi_override = true;
    for (int i = 0; i < 2; ++i) {
      const auto& xi = (*ov.xi)[i];
      if (xi.size() != N) throw Error(ErrorCode::ShapeMismatch, "override does not match the tree");
      const auto& pay = game.payoffs[i];
      std::vector<double> acc(N, 0.0), X(N, 0.0);
      for (int n : tree.order()) {
        int par = tree.parent(n);
        if (par >= 0) {
          double dxp = xi.increment(tree, par), dzp = prof.zeta.increment(tree, par);
          acc[n] = acc[par] + ((1.0 - prof.zeta[par]) * pay.f[par] + dzp * pay.h[par]) * dxp +
                   (1.0 - xi[par]) * pay.g[par] * dzp;
        }
        X[n] = acc[n] + (1.0 - xi.pre(tree, n)) * s.Uhat[i][n];
      }
      rep.drift_M_override[i] = drift_of(X);
      for (int n : tree.order())
        if (rep.drift_M_override[i][n] < -tol)
          rep.issues.push_back({"Mxi;" + std::to_string(i) + " submartingale", n, -rep.drift_M_override[i][n]});
    }
  }
  if (ov.zeta) {
    rep.has_zeta_override = true;
    const auto& z = *ov.zeta;
    if (z.size() != N) throw Error(ErrorCode::ShapeMismatch, "override does not match the tree");
    std::vector<double> acc(N, 0.0), X(N, 0.0);
    for (int n : tree.order()) {
      int par = tree.parent(n);
      if (par >= 0) {
        double dzp = z.increment(tree, par), add = 0.0;
        for (int i = 0; i < 2; ++i) {
          const auto& pay = game.payoffs[i];
          const auto& xi = prof.xi(i);
          double dxp = xi.increment(tree, par);
          add += game.weight(i) * (((1.0 - xi[par]) * pay.g[par] + dxp * pay.h[par]) * dzp + (1.0 - z[par]) * pay.f[par] * dxp);
        }
        acc[n] = acc[par] + add;
      }
      X[n] = acc[n] + (1.0 - z.pre(tree, n)) * s.Vhat[n];
    }
    rep.drift_N_override = drift_of(X);
    for (int n : tree.order())
      if (rep.drift_N_override[n] > tol) rep.issues.push_back({"Nzeta supermartingale", n, rep.drift_N_override[n]});
  }
  return rep;
}

struct SupportReport {
  std::array<std::vector<double>, 2> Z;
  std::vector<double> Y;
  std::vector<double> flat_off_informed;    // per leaf path
  std::vector<double> flat_off_uninformed;  // per leaf path
  std::vector<double> consistency;          // |<p,U> - V| on Gamma^2, else 0
  std::vector<char> in_gamma2;
  std::vector<int> simultaneous_jumps;      // interior nodes where both sides jump
  double max_Z = 0.0;            // largest positive part of Z
  double min_Y = 0.0;            // most negative part of Y
  double max_flat_off = 0.0;
  double max_consistency = 0.0;
};

inline SupportReport support_report(const ScenarioGame& game, const StrategyProfile& prof, const ValueSurfaces& s) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  SupportReport rep;
  rep.Y.assign(N, 0.0);
  rep.consistency.assign(N, 0.0);
  rep.in_gamma2.assign(N, 0);
  for (int i = 0; i < 2; ++i) rep.Z[i].assign(N, 0.0);
  for (int n : tree.order()) {
    double dz = prof.zeta.increment(tree, n);
    double y = 0.0;
    bool any_xi_jump = false;
    for (int i = 0; i < 2; ++i) {
      const auto& pay = game.payoffs[i];
      const auto& xi = prof.xi(i);
      double dx = xi.increment(tree, n);
      any_xi_jump = any_xi_jump || dx > 0.0;
      rep.Z[i][n] = (s.U[i][n] - pay.f[n]) * (1.0 - prof.zeta[n]) + (s.U[i][n] - pay.h[n]) * dz;
      y += game.weight(i) * ((s.V[n] - pay.g[n]) * (1.0 - xi[n]) + (s.V[n] - pay.h[n]) * dx);
      rep.max_Z = std::max(rep.max_Z, rep.Z[i][n]);
    }
    rep.Y[n] = y;
    rep.min_Y = std::min(rep.min_Y, y);
    if (!tree.is_leaf(n) && any_xi_jump && dz > 0.0) rep.simultaneous_jumps.push_back(n);
    bool g2 = std::min(prof.xi0.pre(tree, n), prof.xi1.pre(tree, n)) < 1.0 && prof.zeta.pre(tree, n) < 1.0;
    rep.in_gamma2[n] = g2;
    if (g2) {
      double pu = s.p[n] * s.U[1][n] + (1.0 - s.p[n]) * s.U[0][n];
      rep.consistency[n] = std::abs(pu - s.V[n]);
      rep.max_consistency = std::max(rep.max_consistency, rep.consistency[n]);
    }
  }
  for (int leaf : tree.leaves()) {
    double a = 0.0, b = 0.0;
    for (int n : tree.path_to(leaf)) {
      for (int i = 0; i < 2; ++i) a += rep.Z[i][n] * prof.xi(i).increment(tree, n);
      b += rep.Y[n] * prof.zeta.increment(tree, n);
    }
    rep.flat_off_informed.push_back(a);
    rep.flat_off_uninformed.push_back(b);
    rep.max_flat_off = std::max({rep.max_flat_off, std::abs(a), std::abs(b)});
  }
  return rep;
}

struct ExAnte {
  double direct = 0.0;      // expected remaining payoff under the profile
  double uninformed = 0.0;  // (1 - zeta_{n-}) * Vhat_n
  double informed = 0.0;    // sum_i pi_i (1 - xi^i_{n-}) Uhat^i_n
  double residual = 0.0;
};

/// Compares the remaining payoff of the profile from a node with both
/// survival-weighted value representations.
inline ExAnte ex_ante_check(const ScenarioGame& game, const StrategyProfile& prof, const ValueSurfaces& s, int node) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  if (node < 0 || static_cast<std::size_t>(node) >= tree.size()) throw Error(ErrorCode::IndexOutOfRange, "node out of range");
  ExAnte out;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    int m = stack.back();
    stack.pop_back();
    double w = tree.reach(m) / tree.reach(node);
    double dz = prof.zeta.increment(tree, m);
    for (int i = 0; i < 2; ++i) {
      const auto& pay = game.payoffs[i];
      const auto& xi = prof.xi(i);
      double dx = xi.increment(tree, m);
      out.direct += game.weight(i) * w *
                    (pay.f[m] * (1.0 - prof.zeta[m]) * dx + pay.g[m] * (1.0 - xi[m]) * dz + pay.h[m] * dx * dz);
    }
    for (int c : tree.children(m)) stack.push_back(c);
  }
  out.uninformed = (1.0 - prof.zeta.pre(tree, node)) * s.Vhat[node];
  for (int i = 0; i < 2; ++i)
    out.informed += game.weight(i) * (1.0 - prof.xi(i).pre(tree, node)) * s.Uhat[i][node];
  out.residual = std::max(std::abs(out.direct - out.uninformed), std::abs(out.direct - out.informed));
  return out;
}

struct Certificate {
  bool certified = false;
  double value = 0.0;
  double tol = kDefaultTol;
  std::vector<NodeIssue> violations;
};

/// Martingale-based sufficient conditions on candidate normalized surfaces
/// (U0, U1, V in s; hats and belief are recomputed from the profile).
inline Certificate certify_mart(const ScenarioGame& game, const StrategyProfile& prof, const ValueSurfaces& candidate,
                                double tol = kDefaultTol) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  std::size_t N = tree.size();
  if (candidate.U[0].size() != N || candidate.U[1].size() != N || candidate.V.size() != N)
    throw Error(ErrorCode::ShapeMismatch, "candidate surfaces do not match the tree");
  ValueSurfaces s = candidate;
  hats_from_normalized(game, prof, s);
  Certificate cert;
  cert.tol = tol;
  auto drift = [&](const std::vector<double>& X, int n) { return detail::children_mean(tree, X, n) - X[n]; };

  // (i) and (ii): submartingale M^{0;i}, supermartingale N^0, with terminal
  // values bounded by the terminal payoff.
  std::array<std::vector<double>, 2> M{std::vector<double>(N), std::vector<double>(N)};
  std::vector<double> Np(N), accN(N, 0.0);
  std::array<std::vector<double>, 2> accM{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  for (int n : tree.order()) {
    int par = tree.parent(n);
    double flow = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (par >= 0) accM[i][n] = accM[i][par] + game.payoffs[i].g[par] * prof.zeta.increment(tree, par);
      M[i][n] = accM[i][n] + s.Uhat[i][n];
      if (par >= 0) flow += game.weight(i) * game.payoffs[i].f[par] * prof.xi(i).increment(tree, par);
    }
    if (par >= 0) accN[n] = accN[par] + flow;
    Np[n] = accN[n] + s.Vhat[n];
  }
  for (int n : tree.order()) {
    if (tree.is_leaf(n)) continue;
    for (int i = 0; i < 2; ++i) {
      double d = drift(M[i], n);
      if (d < -tol) cert.violations.push_back({"(i) M0;" + std::to_string(i) + " submartingale", n, -d});
    }
    double d = drift(Np, n);
    if (d > tol) cert.violations.push_back({"(ii) N0 supermartingale", n, d});
  }

  // (iii) informed obstacle, (iv) uninformed obstacle.
  for (int n : tree.order()) {
    double zpre = prof.zeta.pre(tree, n), dz = prof.zeta.increment(tree, n);
    if (zpre < 1.0)
      for (int i = 0; i < 2; ++i) {
        const auto& pay = game.payoffs[i];
        double bound = pay.f[n] + (pay.h[n] - pay.f[n]) * dz / (1.0 - zpre);
        if (s.U[i][n] > bound + tol) cert.violations.push_back({"(iii) informed obstacle", n, s.U[i][n] - bound});
      }
    double w = game.weight(0) * (1.0 - prof.xi0.pre(tree, n)) + game.weight(1) * (1.0 - prof.xi1.pre(tree, n));
    if (w > 0.0) {
      // <p_hat, g> with the survival-to-n weights, plus the jump correction.
      double num = 0.0, jump = 0.0;
      for (int i = 0; i < 2; ++i) {
        const auto& pay = game.payoffs[i];
        const auto& xi = prof.xi(i);
        num += game.weight(i) * (1.0 - xi[n]) * pay.g[n];
        jump += game.weight(i) * pay.h[n] * xi.increment(tree, n);
      }
      double bound = (num + jump) / w;
      if (s.V[n] < bound - tol) cert.violations.push_back({"(iv) uninformed obstacle", n, bound - s.V[n]});
    }
  }

  // (v) ex-ante identity at the root.
  int r = tree.root();
  double pu = game.weight(0) * s.U[0][r] + game.weight(1) * s.U[1][r];
  if (std::abs(s.V[r] - pu) > tol) cert.violations.push_back({"(v) root identity", r, std::abs(s.V[r] - pu)});

  cert.value = s.V[r];
  cert.certified = cert.violations.empty();
  return cert;
}

/// Stopping-time sufficient conditions: every pure rule of either incarnation
/// does no better than its candidate value, every pure rule of the uninformed
/// player does no better than the candidate value, and the values agree.
inline Certificate certify_stop(const ScenarioGame& game, const StrategyProfile& prof, const std::array<double, 2>& Uhat0,
                                double Vhat0, double tol = kDefaultTol, std::size_t cap = kDefaultRuleCap) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  auto rules = enumerate_stopping_rules(tree, cap);
  Certificate cert;
  cert.tol = tol;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    auto proc = pure_process(tree, rules[k]);
    for (int i = 0; i < 2; ++i) {
      if (game.weight(i) == 0.0) continue;
      double v = expected_payoff_exact(tree, game.payoffs[i], proc, prof.zeta);
      if (v < Uhat0[i] - tol)
        cert.violations.push_back({"informed rule " + std::to_string(k) + " regime " + std::to_string(i), -1, Uhat0[i] - v});
    }
    double v = game.weight(0) * expected_payoff_exact(tree, game.payoffs[0], prof.xi0, proc) +
               game.weight(1) * expected_payoff_exact(tree, game.payoffs[1], prof.xi1, proc);
    if (v > Vhat0 + tol) cert.violations.push_back({"uninformed rule " + std::to_string(k), -1, v - Vhat0});
  }
  double pu = game.weight(0) * Uhat0[0] + game.weight(1) * Uhat0[1];
  if (std::abs(pu - Vhat0) > tol) cert.violations.push_back({"value identity", tree.root(), std::abs(pu - Vhat0)});
  cert.value = Vhat0;
  cert.certified = cert.violations.empty();
  return cert;
}

inline Certificate certify_stop(const ScenarioGame& game, const StrategyProfile& prof, const ValueSurfaces& s,
                                double tol = kDefaultTol, std::size_t cap = kDefaultRuleCap) {
  int r = game.tree.root();
  return certify_stop(game, prof, {s.Uhat[0][r], s.Uhat[1][r]}, s.Vhat[r], tol, cap);
}

inline StrategyProfile profile_of(const ScenarioSolution& sol) { return {sol.xi0, sol.xi1, sol.zeta}; }

/// Continuation game at a node: the subtree rooted there, prior replaced by
/// the belief at the node, and all strategies truncated at the node.
struct Subgame {
  ScenarioGame game;
  StrategyProfile profile;
  std::vector<int> original;  // new id -> original id
};

inline Subgame extract_subgame(const ScenarioGame& game, const StrategyProfile& prof, int node) {
  check_profile(game, prof);
  const auto& tree = game.tree;
  Subgame sub;
  std::vector<int> remap(tree.size(), -1);
  std::vector<NodeSpec> specs;
  for (int n : tree.order()) {
    if (!tree.is_ancestor_or_self(node, n)) continue;
    int id = static_cast<int>(sub.original.size());
    remap[n] = id;
    sub.original.push_back(n);
    specs.push_back({id, n == node ? -1 : remap[tree.parent(n)], n == node ? 1.0 : tree.prob(n)});
  }
  sub.game.tree = FiltrationTree(specs);
  std::vector<double> pts;
  double t0 = game.grid[static_cast<std::size_t>(tree.time(node))];
  for (std::size_t k = static_cast<std::size_t>(tree.time(node)); k <= game.grid.steps(); ++k) pts.push_back(game.grid[k] - t0);
  sub.game.grid = TimeGrid(pts);
  sub.game.prior = belief_update(game.prior, prof.xi0.pre(tree, node), prof.xi1.pre(tree, node)).p;
  for (int i = 0; i < 2; ++i)
    for (int n : sub.original) {
      sub.game.payoffs[i].f.push_back(game.payoffs[i].f[n]);
      sub.game.payoffs[i].g.push_back(game.payoffs[i].g[n]);
      sub.game.payoffs[i].h.push_back(game.payoffs[i].h[n]);
    }
  auto eta = rule_at_node(tree, node);
  auto cut = [&](const GeneratingProcess& rho) {
    auto t = truncate_control(rho, tree, eta);
    GeneratingProcess out;
    for (int n : sub.original) out.values.push_back(t[n]);
    return out;
  };
  sub.profile = {cut(prof.xi0), cut(prof.xi1), cut(prof.zeta)};
  return sub;
}

}  // namespace asymdynkin
