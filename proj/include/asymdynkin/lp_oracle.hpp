#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "game_core.hpp"
#include "parallel.hpp"

namespace asymdynkin {

inline constexpr std::size_t kDefaultRuleCap = 20000;

namespace detail {

inline std::size_t count_rules(const FiltrationTree& tree, int n, std::size_t cap) {
  if (tree.is_leaf(n)) return 1;
  std::size_t prod = 1;
  for (int c : tree.children(n)) {
    std::size_t k = count_rules(tree, c, cap);
    if (prod > (cap + 1) / std::max<std::size_t>(k, 1)) return cap + 1;
    prod *= k;
  }
  return std::min(prod + 1, cap + 1);
}

// Rules for the subtree at n, each as the list of its stopping nodes.
inline std::vector<std::vector<int>> subtree_rules(const FiltrationTree& tree, int n) {
  std::vector<std::vector<int>> out{{n}};
  if (tree.is_leaf(n)) return out;
  std::vector<std::vector<int>> acc{{}};
  for (int c : tree.children(n)) {
    auto sub = subtree_rules(tree, c);
    std::vector<std::vector<int>> next;
    next.reserve(acc.size() * sub.size());
    for (const auto& a : acc)
      for (const auto& s : sub) {
        auto merged = a;
        merged.insert(merged.end(), s.begin(), s.end());
        next.push_back(std::move(merged));
      }
    acc = std::move(next);
  }
  out.insert(out.end(), acc.begin(), acc.end());
  return out;
}

}  // namespace detail

inline std::size_t count_stopping_rules(const FiltrationTree& tree, std::size_t cap = kDefaultRuleCap) {
  return detail::count_rules(tree, tree.root(), cap);
}

/// All pure adapted stopping rules: stop at the root, or continue and combine
/// one rule per child subtree.
inline std::vector<StoppingRule> enumerate_stopping_rules(const FiltrationTree& tree, std::size_t cap = kDefaultRuleCap) {
  std::size_t count = count_stopping_rules(tree, cap);
  if (count > cap)
    throw Error(ErrorCode::EnumerationCapExceeded, "more than " + std::to_string(cap) + " stopping rules");
  std::vector<StoppingRule> rules;
  rules.reserve(count);
  for (const auto& nodes : detail::subtree_rules(tree, tree.root())) {
    StoppingRule r{std::vector<char>(tree.size(), 0)};
    for (int n : nodes) r.stop[n] = 1;
    rules.push_back(std::move(r));
  }
  return rules;
}

/// Payoff matrix of the regime game in factored form: regime i contributes
/// A[i](tau, sigma) = E[payoff_i(tau, sigma)], and the pair row (tau0, tau1)
/// against sigma pays prior*A[1](tau1, sigma) + (1-prior)*A[0](tau0, sigma).
/// The informed (row) player minimizes.
struct GameMatrix {
  std::vector<StoppingRule> rows;
  std::vector<StoppingRule> cols;
  std::array<Eigen::MatrixXd, 2> A;
  double prior = 0.5;

  double entry(std::size_t tau0, std::size_t tau1, std::size_t sigma) const {
    return prior * A[1](tau1, sigma) + (1.0 - prior) * A[0](tau0, sigma);
  }

  std::size_t pair_count() const noexcept { return rows.size() * rows.size(); }

  /// Materialized pair-row matrix; row index = tau0 * |rules| + tau1.
  Eigen::MatrixXd dense() const {
    std::size_t r = rows.size();
    Eigen::MatrixXd D(r * r, cols.size());
    for (std::size_t t0 = 0; t0 < r; ++t0)
      for (std::size_t t1 = 0; t1 < r; ++t1)
        D.row(t0 * r + t1) = prior * A[1].row(t1) + (1.0 - prior) * A[0].row(t0);
    return D;
  }
};

namespace detail {

inline std::vector<int> stop_nodes(const StoppingRule& r) {
  std::vector<int> out;
  for (std::size_t n = 0; n < r.stop.size(); ++n)
    if (r.stop[n]) out.push_back(static_cast<int>(n));
  return out;
}

}  // namespace detail

/// Exact pure-vs-pure expected payoff of one regime. Only stopping nodes carry
/// increments, so the sum reduces to the stopping nodes of both rules.
inline double pure_payoff(const FiltrationTree& tree, const PayoffTriple& pay,
                          const std::vector<int>& tau_nodes, const GeneratingProcess& tau_proc,
                          const std::vector<int>& sigma_nodes, const GeneratingProcess& sigma_proc) {
  double total = 0.0;
  for (int n : tau_nodes) {
    double dz = sigma_proc.increment(tree, n);
    total += tree.reach(n) * (pay.f[n] * (1.0 - sigma_proc[n]) + pay.h[n] * dz);
  }
  for (int n : sigma_nodes) total += tree.reach(n) * pay.g[n] * (1.0 - tau_proc[n]);
  return total;
}

inline GameMatrix build_matrix(const ScenarioGame& game, const std::vector<StoppingRule>& rows,
                               const std::vector<StoppingRule>& cols) {
  const auto& tree = game.tree;
  for (const auto& r : rows)
    if (r.stop.size() != tree.size()) throw Error(ErrorCode::ShapeMismatch, "row rule size differs from tree");
  for (const auto& c : cols)
    if (c.stop.size() != tree.size()) throw Error(ErrorCode::ShapeMismatch, "column rule size differs from tree");
  GameMatrix M;
  M.rows = rows;
  M.cols = cols;
  M.prior = game.prior;
  std::vector<std::vector<int>> rn, cn;
  std::vector<GeneratingProcess> rp, cp;
  for (const auto& r : rows) {
    rn.push_back(detail::stop_nodes(r));
    rp.push_back(pure_process(tree, r));
  }
  for (const auto& c : cols) {
    cn.push_back(detail::stop_nodes(c));
    cp.push_back(pure_process(tree, c));
  }
  for (int i = 0; i < 2; ++i) {
    M.A[i].resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    parallel_for(rows.size(), [&](std::size_t a) {
      for (std::size_t b = 0; b < cols.size(); ++b)
        M.A[i](a, b) = pure_payoff(tree, game.payoffs[i], rn[a], rp[a], cn[b], cp[b]);
    });
  }
  return M;
}

inline GameMatrix build_matrix(const ScenarioGame& game, std::size_t cap = kDefaultRuleCap) {
  auto rules = enumerate_stopping_rules(game.tree, cap);
  return build_matrix(game, rules, rules);
}

/// Solution of a matrix game whose row player minimizes.
struct MixedSolution {
  double value = 0.0;
  std::vector<double> row_mix;
  std::vector<double> col_mix;
  double gap = 0.0;
};

namespace detail {

// Dense tableau simplex for max c^T y s.t. M y <= b, y >= 0 with b >= 0.
// Returns primal y and the dual vector of the constraints.
class Simplex {
 public:
  Simplex(const Eigen::MatrixXd& M, const std::vector<double>& b, const std::vector<double>& c)
      : m_(static_cast<std::size_t>(M.rows())), n_(static_cast<std::size_t>(M.cols())),
        width_(n_ + m_ + 1), T_((m_ + 1) * width_, 0.0), basis_(m_) {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      at(i, n_ + i) = 1.0;
      at(i, width_ - 1) = b[i];
      basis_[i] = n_ + i;
    }
    for (std::size_t j = 0; j < n_; ++j) at(m_, j) = -c[j];
  }

  void solve(std::size_t budget = 100000) {
    constexpr double eps = 1e-12;
    std::size_t degenerate_run = 0;
    for (std::size_t iter = 0; iter < budget; ++iter) {
      bool bland = degenerate_run > 50;
      std::size_t enter = width_;
      double best = -eps;
      for (std::size_t j = 0; j + 1 < width_; ++j) {
        double rc = at(m_, j);
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter == width_) return;
      std::size_t leave = m_;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        double a = at(i, enter);
        if (a <= eps) continue;
        double r = at(i, width_ - 1) / a;
        if (r < ratio - 1e-15 || (r <= ratio + 1e-15 && leave < m_ && basis_[i] < basis_[leave])) {
          ratio = r;
          leave = i;
        }
      }
      if (leave == m_) throw Error(ErrorCode::NumericalFailure, "linear program is unbounded");
      degenerate_run = ratio <= eps ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    throw Error(ErrorCode::NumericalFailure, "simplex iteration budget exhausted");
  }

  std::vector<double> primal() const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) y[basis_[i]] = at(i, width_ - 1);
    return y;
  }

  std::vector<double> dual() const {
    std::vector<double> z(m_);
    for (std::size_t i = 0; i < m_; ++i) z[i] = at(m_, n_ + i);
    return z;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return T_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return T_[i * width_ + j]; }

  void pivot(std::size_t r, std::size_t s) {
    double inv = 1.0 / at(r, s);
    for (std::size_t j = 0; j < width_; ++j) at(r, j) *= inv;
    at(r, s) = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double factor = at(i, s);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= factor * at(r, j);
      at(i, s) = 0.0;
    }
    basis_[r] = s;
  }

  std::size_t m_, n_, width_;
  std::vector<double> T_;
  std::vector<std::size_t> basis_;
};

inline std::vector<double> normalized(std::vector<double> v) {
  double s = 0.0;
  for (double& x : v) {
    x = std::max(x, 0.0);
    s += x;
  }
  if (s > 0.0)
    for (double& x : v) x /= s;
  return v;
}

}  // namespace detail

/// Minimax of a matrix game, rows minimizing. Row y solves
/// max 1^T y s.t. B^T y <= 1 with B = A + shift > 0; the column mix is the
/// dual of that program.
inline MixedSolution solve_zero_sum(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "empty game matrix");
  double shift = 1.0 - A.minCoeff();
  Eigen::MatrixXd Bt = (A.array() + shift).matrix().transpose();
  detail::Simplex lp(Bt, std::vector<double>(static_cast<std::size_t>(A.cols()), 1.0),
                     std::vector<double>(static_cast<std::size_t>(A.rows()), 1.0));
  lp.solve();
  MixedSolution sol;
  sol.row_mix = detail::normalized(lp.primal());
  sol.col_mix = detail::normalized(lp.dual());
  Eigen::Map<const Eigen::VectorXd> x(sol.row_mix.data(), A.rows());
  Eigen::Map<const Eigen::VectorXd> y(sol.col_mix.data(), A.cols());
  double upper = (A.transpose() * x).maxCoeff();
  double lower = (A * y).minCoeff();
  sol.value = 0.5 * (upper + lower);
  sol.gap = std::abs(upper - lower);
  if (sol.gap > 1e-9) throw Error(ErrorCode::NumericalFailure, "duality gap " + std::to_string(sol.gap) + " not closed");
  return sol;
}

struct PureGap {
  double upper = 0.0;  // min over rows of max over columns
  double lower = 0.0;  // max over columns of min over rows
  double gap = 0.0;
};

inline PureGap pure_gap(const Eigen::MatrixXd& A) {
  PureGap g;
  g.upper = A.rowwise().maxCoeff().minCoeff();
  g.lower = A.colwise().minCoeff().maxCoeff();
  g.gap = g.upper - g.lower;
  return g;
}

/// Pure gap of the factored game without materializing pair rows for the
/// lower value (the minimizer's reply separates across regimes).
inline PureGap pure_gap(const GameMatrix& M) {
  PureGap g;
  std::size_t r = M.rows.size(), c = M.cols.size();
  g.lower = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < c; ++s) {
    double v = M.prior * M.A[1].col(s).minCoeff() + (1.0 - M.prior) * M.A[0].col(s).minCoeff();
    g.lower = std::max(g.lower, v);
  }
  g.upper = std::numeric_limits<double>::infinity();
  for (std::size_t t0 = 0; t0 < r; ++t0)
    for (std::size_t t1 = 0; t1 < r; ++t1) {
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < c; ++s) worst = std::max(worst, M.entry(t0, t1, s));
      g.upper = std::min(g.upper, worst);
    }
  g.gap = g.upper - g.lower;
  return g;
}

inline constexpr double kMixSnap = 1e-12;

inline GeneratingProcess mixture_to_generating(const std::vector<StoppingRule>& rules, const std::vector<double>& weights,
                                               const FiltrationTree& tree) {
  if (rules.size() != weights.size()) throw Error(ErrorCode::ShapeMismatch, "mix and rule counts differ");
  GeneratingProcess out = constant_process(tree, 0.0);
  for (std::size_t k = 0; k < rules.size(); ++k) {
    if (weights[k] == 0.0) continue;
    auto p = pure_process(tree, rules[k]);
    for (std::size_t n = 0; n < tree.size(); ++n) out[n] += weights[k] * p[n];
  }
  // Leaves are exactly 1 for a probability mix; remove rounding residue so
  // that fully stopped nodes read exactly 1 and untouched nodes exactly 0.
  for (int leaf : tree.leaves()) out[leaf] = 1.0;
  for (int n : tree.order()) {
    out[n] = std::clamp(out[n], 0.0, 1.0);
    if (out[n] > 1.0 - kMixSnap) out[n] = 1.0;
    if (out[n] < kMixSnap) out[n] = 0.0;
    int par = tree.parent(n);
    if (par >= 0) out[n] = std::max(out[n], out[par]);
  }
  return out;
}

/// Equilibrium of the regime game from the oracle.
struct ScenarioSolution {
  double value = 0.0;
  double gap = 0.0;
  std::vector<StoppingRule> rules;
  std::vector<double> mix0, mix1;  // informed incarnations, over rules
  std::vector<double> col_mix;     // uninformed player, over rules
  GeneratingProcess xi0, xi1, zeta;
  std::size_t iterations = 0;
};

/// Exact minimax by double oracle: a restricted pair-row LP is grown with best
/// responses found by scanning the full factored matrix until neither side
/// can improve. Terminates because the rule sets are finite.
inline ScenarioSolution solve_scenario_game(const ScenarioGame& game, std::size_t cap = kDefaultRuleCap) {
  game.validate();
  GameMatrix M = build_matrix(game, cap);
  const std::size_t R = M.rows.size();
  const double pi = M.prior;

  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 0}};
  std::vector<std::size_t> cols{0};
  ScenarioSolution out;
  out.rules = M.rows;

  for (std::size_t iter = 1;; ++iter) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < pairs.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) sub(a, b) = M.entry(pairs[a].first, pairs[a].second, cols[b]);
    MixedSolution restricted = solve_zero_sum(sub);

    std::vector<double> x0(R, 0.0), x1(R, 0.0), y(R, 0.0);
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      x0[pairs[a].first] += restricted.row_mix[a];
      x1[pairs[a].second] += restricted.row_mix[a];
    }
    for (std::size_t b = 0; b < cols.size(); ++b) y[cols[b]] += restricted.col_mix[b];

    Eigen::Map<const Eigen::VectorXd> X0(x0.data(), R), X1(x1.data(), R), Y(y.data(), R);
    Eigen::VectorXd colvals = pi * (M.A[1].transpose() * X1) + (1.0 - pi) * (M.A[0].transpose() * X0);
    Eigen::VectorXd r0 = M.A[0] * Y, r1 = M.A[1] * Y;
    Eigen::Index best_col = 0, best0 = 0, best1 = 0;
    double upper = colvals.maxCoeff(&best_col);
    double lower = pi * r1.minCoeff(&best1) + (1.0 - pi) * r0.minCoeff(&best0);

    bool added = false;
    auto pr = std::make_pair(static_cast<std::size_t>(best0), static_cast<std::size_t>(best1));
    if (upper - lower > 1e-12) {
      if (std::find(pairs.begin(), pairs.end(), pr) == pairs.end()) {
        pairs.push_back(pr);
        added = true;
      }
      if (std::find(cols.begin(), cols.end(), static_cast<std::size_t>(best_col)) == cols.end()) {
        cols.push_back(static_cast<std::size_t>(best_col));
        added = true;
      }
    }
    if (!added) {
      out.gap = std::abs(upper - lower);
      if (out.gap > 1e-9) throw Error(ErrorCode::NumericalFailure, "double oracle stalled with gap " + std::to_string(out.gap));
      out.value = 0.5 * (upper + lower);
      out.mix0 = std::move(x0);
      out.mix1 = std::move(x1);
      out.col_mix = std::move(y);
      out.iterations = iter;
      break;
    }
  }
  out.xi0 = mixture_to_generating(out.rules, out.mix0, game.tree);
  out.xi1 = mixture_to_generating(out.rules, out.mix1, game.tree);
  out.zeta = mixture_to_generating(out.rules, out.col_mix, game.tree);
  return out;
}

}  // namespace asymdynkin
