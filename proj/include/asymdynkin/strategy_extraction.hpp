#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "diffusion_model.hpp"
#include "filter_simulation.hpp"
#include "parallel.hpp"
#include "pde_solver.hpp"
#include "random.hpp"

namespace asymdynkin {

/// Generating-process trajectories of the three strategies along one path,
/// indexed by step k = 0..K at times k * dt.
struct StrategyTrajectory {
  std::vector<double> p_pre;   // belief before the informed action at step k
  std::vector<double> p_post;  // belief after it
  std::vector<double> xi0, xi1, zeta;
  double misplaced_mass[2] = {0.0, 0.0};  // informed mass placed off the action sets before T
  double reflection_excess = 0.0;         // largest distance of p_post into an action set
};

/// Feedback strategies read off the surfaces: the uninformed player stops on
/// first entry into its action set; each incarnation of the informed player
/// stops with the smallest probability that returns the belief to the
/// closure of its continuation region.
struct StrategyMap {
  std::shared_ptr<const PDESurfaces> surfaces;
  DiffusionModel model;
  double dt = 1e-3;
  double set_tol = 1e-4;
  bool uninformed_never_stops = false;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(model.T / dt)); }

  bool in_uninformed_set(double t, double p, double x) const {
    return surfaces->interp(2, t, p, x) - surfaces->interp_payoff(model.g, t, x) <= set_tol;
  }
  bool in_informed_set(int i, double t, double p, double x) const {
    return surfaces->interp(i, t, p, x) >= surfaces->interp_payoff(model.f, t, x) - set_tol;
  }

  /// Nearest belief in the continuation region of incarnation i reached by
  /// moving p in the direction its stopping pushes the belief (down for 1,
  /// up for 0). Returns -1 when the whole segment lies in the action set.
  double push_target(int i, double t, double p, double x) const {
    const double step = surfaces->grid.dp() / 4.0;
    const double dir = i == 1 ? -1.0 : 1.0;
    double inside = p, probe = p;
    for (;;) {
      double next = probe + dir * step;
      bool last = i == 1 ? next <= 0.0 : next >= 1.0;
      if (last) next = i == 1 ? 0.0 : 1.0;
      if (!in_informed_set(i, t, next, x)) {
        double a = inside, b = next;  // a in the set, b outside
        for (int it = 0; it < 50; ++it) {
          double mid = 0.5 * (a + b);
          if (in_informed_set(i, t, mid, x)) a = mid;
          else b = mid;
        }
        return b;
      }
      if (last) return -1.0;
      inside = probe = next;
    }
  }

  /// Evaluates the strategies on a path of the state and the observation
  /// posterior sampled at every step.
  StrategyTrajectory evaluate(const double* X, const double* psi) const {
    const std::size_t K = steps();
    StrategyTrajectory tr;
    tr.p_pre.resize(K + 1);
    tr.p_post.resize(K + 1);
    tr.xi0.resize(K + 1);
    tr.xi1.resize(K + 1);
    tr.zeta.resize(K + 1);
    double x0l = 0.0, x1l = 0.0, zl = 0.0, last_p = psi[0];
    auto belief = [&](double s, double a0, double a1) {
      double num = s * (1.0 - a1), den = num + (1.0 - s) * (1.0 - a0);
      if (den <= 0.0) return last_p;
      return num / den;
    };
    auto odds = [](double q) { return q / (1.0 - q); };
    for (std::size_t k = 0; k <= K; ++k) {
      double t = static_cast<double>(k) * dt, x = X[k], s = psi[k];
      double p = belief(s, x0l, x1l);
      tr.p_pre[k] = p;
      if (k == K) {
        x0l = x1l = zl = 1.0;
      } else {
        bool uninformed_stops = !uninformed_never_stops && in_uninformed_set(t, p, x);
        if (uninformed_stops) zl = 1.0;
        if (!uninformed_stops) {
          double q[2] = {0.0, 0.0};
          for (int i = 0; i < 2; ++i) {
            if (!in_informed_set(i, t, p, x)) continue;
            double target = push_target(i, t, p, x);
            if (target < 0.0 || (i == 1 && p <= 0.0) || (i == 0 && p >= 1.0)) {
              q[i] = 1.0;
            } else if (i == 1) {
              q[i] = target <= 0.0 ? 1.0 : std::clamp(1.0 - odds(target) / odds(p), 0.0, 1.0);
            } else {
              q[i] = target >= 1.0 ? 1.0 : std::clamp(1.0 - odds(p) / odds(target), 0.0, 1.0);
            }
          }
          double n0 = x0l + (1.0 - x0l) * q[0], n1 = x1l + (1.0 - x1l) * q[1];
          for (int i = 0; i < 2; ++i) {
            double inc = i == 0 ? n0 - x0l : n1 - x1l;
            if (inc > 0.0 && !in_informed_set(i, t, p, x)) tr.misplaced_mass[i] += inc;
          }
          x0l = n0;
          x1l = n1;
        }
      }
      tr.xi0[k] = x0l;
      tr.xi1[k] = x1l;
      tr.zeta[k] = zl;
      double pp = belief(s, x0l, x1l);
      tr.p_post[k] = pp;
      last_p = pp;
      if (k < K && zl < 1.0)
        for (int i = 0; i < 2; ++i)
          if ((i == 0 ? x0l : x1l) < 1.0 && in_informed_set(i, t, pp, x)) {
            double target = push_target(i, t, pp, x);
            if (target >= 0.0) tr.reflection_excess = std::max(tr.reflection_excess, std::abs(pp - target));
          }
    }
    return tr;
  }
};

inline StrategyMap extract_strategies(std::shared_ptr<const PDESurfaces> surfaces, const DiffusionModel& model, double dt,
                                      double set_tol = 1e-4) {
  if (!(dt > 0.0)) throw Error(ErrorCode::OutOfRange, "dt must be positive");
  StrategyMap s;
  s.surfaces = std::move(surfaces);
  s.model = model;
  s.dt = dt;
  s.set_tol = set_tol;
  return s;
}

struct ConditionResult {
  std::string name;
  bool pass = false;
  double statistic = 0.0;  // worst-case quantity the verdict is based on
  double ci_lo = 0.0, ci_hi = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SufficiencyReport {
  std::vector<ConditionResult> conditions;  // (i) .. (v)
  std::size_t paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double max_misplaced_mass = 0.0;
  double max_reflection_excess = 0.0;
  bool all_pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return !conditions.empty();
  }
};

struct VerifyOptions {
  std::size_t paths = 10000;
  double dt = 1e-3;
  double alpha = 0.01;
  double tol = 1e-4;           // obstacle slack
  double identity_tol = 1e-2;  // root identity
  double bias_tol = 5e-3;      // allowance for time and grid discretization per checkpoint increment
  std::size_t checkpoints = 10;
  std::size_t batch = 2048;
  std::uint64_t seed = 1;
};

/// Monte Carlo checks of the sufficient conditions along simulated paths of
/// the extracted strategies.
inline SufficiencyReport mc_verify_sufficiency(const DiffusionModel& m, const StrategyMap& strat, const VerifyOptions& opt) {
  const PDESurfaces& S = *strat.surfaces;
  const std::size_t K = detail::step_count(m.T, opt.dt);
  const std::size_t C = std::max<std::size_t>(1, std::min(opt.checkpoints, K));
  std::vector<std::size_t> ck(C + 1);
  for (std::size_t c = 0; c <= C; ++c) ck[c] = (c * K) / C;
  const std::size_t n = opt.paths;
  StrategyMap sm = strat;
  sm.dt = opt.dt;

  SufficiencyReport rep;
  rep.paths = n;
  rep.dt = opt.dt;
  rep.seed = opt.seed;

  // per path, per checkpoint process values; measure 0, 1 regimes, 2 observation
  std::vector<double> proc[3];
  std::vector<std::size_t> visited[3], bad[3];
  std::vector<double> misplaced(n * 3, 0.0), excess(n * 3, 0.0);
  RandomDevice dev(opt.seed);
  for (int meas = 0; meas < 3; ++meas) {
    proc[meas].assign(n * (C + 1), 0.0);
    visited[meas].assign(n, 0);
    bad[meas].assign(n, 0);
    for (std::size_t start = 0; start < n; start += opt.batch) {
      std::size_t cnt = std::min(opt.batch, n - start);
      SimulationOptions so;
      so.stream_offset = static_cast<std::uint64_t>(meas) * (std::uint64_t{1} << 40) + start;
      PathBundle b;
      if (meas < 2) {
        so.regime = meas;
        b = simulate_regime_paths(m, cnt, opt.dt, dev, so);
      } else {
        b = simulate_filter_paths(m, cnt, opt.dt, dev, so);
      }
      const std::size_t R = b.records();
      parallel_for(cnt, [&](std::size_t q) {
        std::size_t path = start + q;
        const double* X = &b.X[q * R];
        const double* psi = &b.psi[q * R];
        auto tr = sm.evaluate(X, psi);
        misplaced[path * 3 + static_cast<std::size_t>(meas)] = std::max(tr.misplaced_mass[0], tr.misplaced_mass[1]);
        excess[path * 3 + static_cast<std::size_t>(meas)] = tr.reflection_excess;
        double acc = 0.0;
        std::size_t c = 0;
        for (std::size_t k = 0; k <= K; ++k) {
          double t = static_cast<double>(k) * opt.dt, x = X[k], p = tr.p_pre[k];
          double z_pre = k ? tr.zeta[k - 1] : 0.0, a0 = k ? tr.xi0[k - 1] : 0.0, a1 = k ? tr.xi1[k - 1] : 0.0;
          double f = m.f(x, t), g = m.g(x, t);
          if (k == ck[c]) {
            double val;
            if (meas < 2) val = acc + (1.0 - z_pre) * S.interp(meas, t, p, x);
            else val = acc + (psi[k] * (1.0 - a1) + (1.0 - psi[k]) * (1.0 - a0)) * S.interp(2, t, p, x);
            proc[meas][path * (C + 1) + c] = val;
            ++c;
          }
          // obstacle slacks against the payoffs as seen on the grid
          double fg = S.interp_payoff(m.f, t, x), gg = S.interp_payoff(m.g, t, x), hg = S.interp_payoff(m.h, t, x);
          if (meas < 2) {
            acc += g * (tr.zeta[k] - z_pre);
            if (z_pre < 1.0) {
              double jump = (tr.zeta[k] - z_pre) / (1.0 - z_pre);
              ++visited[meas][path];
              if (fg + (hg - fg) * jump < S.interp(meas, t, p, x) - opt.tol) ++bad[meas][path];
            }
          } else {
            acc += f * (psi[k] * (tr.xi1[k] - a1) + (1.0 - psi[k]) * (tr.xi0[k] - a0));
            double alive = psi[k] * (1.0 - a1) + (1.0 - psi[k]) * (1.0 - a0);
            if (alive > 0.0) {
              double jump = (psi[k] * (tr.xi1[k] - a1) + (1.0 - psi[k]) * (tr.xi0[k] - a0)) / alive;
              ++visited[meas][path];
              if (gg + (hg - gg) * jump > S.interp(2, t, p, x) + opt.tol) ++bad[meas][path];
            }
          }
        }
      });
    }
  }
  for (double v : misplaced) rep.max_misplaced_mass = std::max(rep.max_misplaced_mass, v);
  for (double v : excess) rep.max_reflection_excess = std::max(rep.max_reflection_excess, v);

  // mean and standard error of the increment between checkpoints c and c+1
  auto increment = [&](int meas, std::size_t c, double& mean, double& se) {
    double s = 0.0, ss = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double d = proc[meas][p * (C + 1) + c + 1] - proc[meas][p * (C + 1) + c];
      s += d;
      ss += d * d;
    }
    mean = s / static_cast<double>(n);
    se = n > 1 ? std::sqrt(std::max(0.0, ss / static_cast<double>(n) - mean * mean) / static_cast<double>(n - 1)) : 0.0;
  };

  {
    ConditionResult r{"(i)", true, 1e300, 0, 0, -opt.bias_tol, ""};
    for (int i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < C; ++c) {
        double mean, se;
        increment(i, c, mean, se);
        double stat = mean + 4 * se;
        if (stat < r.statistic) {
          r.statistic = stat;
          r.ci_lo = mean - 4 * se;
          r.ci_hi = mean + 4 * se;
          r.detail = "regime " + std::to_string(i) + ", increment " + std::to_string(c);
        }
      }
    r.pass = r.statistic >= -opt.bias_tol;
    rep.conditions.push_back(r);
  }
  {
    ConditionResult r{"(ii)", true, -1e300, 0, 0, opt.bias_tol, ""};
    for (std::size_t c = 0; c < C; ++c) {
      double mean, se;
      increment(2, c, mean, se);
      double stat = mean - 4 * se;
      if (stat > r.statistic) {
        r.statistic = stat;
        r.ci_lo = mean - 4 * se;
        r.ci_hi = mean + 4 * se;
        r.detail = "increment " + std::to_string(c);
      }
    }
    r.pass = r.statistic <= opt.bias_tol;
    rep.conditions.push_back(r);
  }
  auto fraction = [&](std::initializer_list<int> ms, const char* name, const char* what) {
    std::size_t vis = 0, b = 0;
    for (int meas : ms)
      for (std::size_t p = 0; p < n; ++p) {
        vis += visited[meas][p];
        b += bad[meas][p];
      }
    double frac = vis ? 1.0 - static_cast<double>(b) / static_cast<double>(vis) : 1.0;
    ConditionResult r{name, frac >= 1.0 - opt.alpha, frac, frac, frac, 1.0 - opt.alpha, what};
    rep.conditions.push_back(r);
  };
  fraction({0, 1}, "(iii)", "fraction of visited points where the informed obstacle holds");
  fraction({2}, "(iv)", "fraction of visited points where the uninformed obstacle holds");
  {
    double v = S.interp(2, 0.0, m.pi, m.x0);
    double mix = m.pi * S.interp(1, 0.0, m.pi, m.x0) + (1.0 - m.pi) * S.interp(0, 0.0, m.pi, m.x0);
    double d = std::abs(v - mix);
    rep.conditions.push_back({"(v)", d <= opt.identity_tol, d, d, d, opt.identity_tol, "root identity residual"});
  }
  return rep;
}

}  // namespace asymdynkin
