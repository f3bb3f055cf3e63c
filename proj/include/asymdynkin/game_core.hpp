#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace asymdynkin {

inline constexpr double kMonotoneTol = 1e-12;
inline constexpr double kProbSumTol = 1e-12;

/// Ordered time points 0 = t_0 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid() = default;

  explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::ShapeMismatch, "time grid is empty");
    if (points_.front() != 0.0) throw Error(ErrorCode::OutOfRange, "time grid must start at 0");
    for (std::size_t k = 1; k < points_.size(); ++k)
      if (!(points_[k] > points_[k - 1]))
        throw Error(ErrorCode::NotMonotone, "time grid must be strictly increasing");
  }

  static TimeGrid uniform(std::size_t steps, double horizon) {
    std::vector<double> pts(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
      pts[k] = horizon * static_cast<double>(k) / static_cast<double>(steps == 0 ? 1 : steps);
    return TimeGrid(std::move(pts));
  }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t steps() const noexcept { return points_.empty() ? 0 : points_.size() - 1; }
  double horizon() const noexcept { return points_.empty() ? 0.0 : points_.back(); }
  double operator[](std::size_t k) const { return points_.at(k); }

 private:
  std::vector<double> points_;
};

/// One node record as it appears in game files.
struct NodeSpec {
  int id = 0;
  int parent = -1;
  double p = 1.0;
};

/// Finite filtration tree. Node ids are 0..n-1; the root has parent -1.
class FiltrationTree {
 public:
  FiltrationTree() = default;

  explicit FiltrationTree(const std::vector<NodeSpec>& specs) {
    std::size_t n = specs.size();
    if (n == 0) throw Error(ErrorCode::InvalidTree, "tree has no nodes");
    parent_.assign(n, -2);
    prob_.assign(n, 0.0);
    for (const auto& s : specs) {
      if (s.id < 0 || static_cast<std::size_t>(s.id) >= n)
        throw Error(ErrorCode::InvalidTree, "node id " + std::to_string(s.id) + " outside 0.." + std::to_string(n - 1));
      if (parent_[s.id] != -2) throw Error(ErrorCode::InvalidTree, "duplicate node id " + std::to_string(s.id));
      if (s.parent < -1 || s.parent >= static_cast<int>(n) || s.parent == s.id)
        throw Error(ErrorCode::InvalidTree, "node " + std::to_string(s.id) + " has invalid parent");
      if (!(s.p >= 0.0 && s.p <= 1.0))
        throw Error(ErrorCode::InvalidTree, "node " + std::to_string(s.id) + " has probability outside [0,1]");
      parent_[s.id] = s.parent;
      prob_[s.id] = s.parent < 0 ? 1.0 : s.p;
    }
    build();
  }

  /// Single path with steps+1 nodes.
  static FiltrationTree chain(std::size_t steps) {
    std::vector<NodeSpec> specs;
    for (std::size_t k = 0; k <= steps; ++k)
      specs.push_back({static_cast<int>(k), static_cast<int>(k) - 1, 1.0});
    return FiltrationTree(specs);
  }

  /// Complete binary tree; up_prob[m] is the probability of the first child
  /// of internal node m (breadth-first numbering). Missing entries use 1/2.
  static FiltrationTree binary(std::size_t depth, const std::vector<double>& up_prob = {}) {
    std::vector<NodeSpec> specs{{0, -1, 1.0}};
    std::size_t next = 1;
    std::size_t level_begin = 0, level_end = 1;
    for (std::size_t d = 0; d < depth; ++d) {
      for (std::size_t m = level_begin; m < level_end; ++m) {
        double q = m < up_prob.size() ? up_prob[m] : 0.5;
        specs.push_back({static_cast<int>(next++), static_cast<int>(m), q});
        specs.push_back({static_cast<int>(next++), static_cast<int>(m), 1.0 - q});
      }
      level_begin = level_end;
      level_end = next;
    }
    return FiltrationTree(specs);
  }

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t depth() const noexcept { return depth_; }
  int root() const noexcept { return root_; }
  int parent(int n) const { return parent_.at(n); }
  int time(int n) const { return time_.at(n); }
  double prob(int n) const { return prob_.at(n); }
  /// Unconditional probability of reaching node n.
  double reach(int n) const { return reach_.at(n); }
  const std::vector<int>& children(int n) const { return children_.at(n); }
  bool is_leaf(int n) const { return children_.at(n).empty(); }
  /// Nodes in breadth-first order (parents before children).
  const std::vector<int>& order() const noexcept { return order_; }
  const std::vector<int>& leaves() const noexcept { return leaves_; }

  /// Root-to-node sequence.
  std::vector<int> path_to(int n) const {
    std::vector<int> path(time(n) + 1);
    for (int k = time(n); k >= 0; --k) {
      path[k] = n;
      n = parent_[n];
    }
    return path;
  }

  std::vector<std::vector<int>> paths() const {
    std::vector<std::vector<int>> out;
    out.reserve(leaves_.size());
    for (int leaf : leaves_) out.push_back(path_to(leaf));
    return out;
  }

  bool is_ancestor_or_self(int a, int n) const {
    while (n >= 0 && time_[n] > time_[a]) n = parent_[n];
    return n == a;
  }

  std::vector<NodeSpec> specs() const {
    std::vector<NodeSpec> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = {static_cast<int>(n), parent_[n], parent_[n] < 0 ? 1.0 : prob_[n]};
    return out;
  }

 private:
  void build() {
    std::size_t n = parent_.size();
    children_.assign(n, {});
    root_ = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (parent_[i] == -1) {
        if (root_ >= 0) throw Error(ErrorCode::InvalidTree, "more than one root");
        root_ = static_cast<int>(i);
      } else {
        children_[parent_[i]].push_back(static_cast<int>(i));
      }
    }
    if (root_ < 0) throw Error(ErrorCode::InvalidTree, "no root node");
    time_.assign(n, -1);
    reach_.assign(n, 0.0);
    order_.clear();
    std::queue<int> q;
    q.push(root_);
    time_[root_] = 0;
    reach_[root_] = 1.0;
    while (!q.empty()) {
      int m = q.front();
      q.pop();
      order_.push_back(m);
      double sum = 0.0;
      for (int c : children_[m]) {
        time_[c] = time_[m] + 1;
        reach_[c] = reach_[m] * prob_[c];
        sum += prob_[c];
        q.push(c);
      }
      if (!children_[m].empty() && std::abs(sum - 1.0) > kProbSumTol)
        throw Error(ErrorCode::InvalidTree, "children of node " + std::to_string(m) + " have probabilities summing to " + std::to_string(sum));
    }
    if (order_.size() != n) throw Error(ErrorCode::InvalidTree, "some nodes are unreachable from the root");
    leaves_.clear();
    depth_ = 0;
    for (int m : order_)
      if (children_[m].empty()) {
        leaves_.push_back(m);
        depth_ = static_cast<std::size_t>(time_[m]);
      }
    for (int leaf : leaves_)
      if (static_cast<std::size_t>(time_[leaf]) != depth_)
        throw Error(ErrorCode::InvalidTree, "leaf " + std::to_string(leaf) + " is not at the final time index");
  }

  std::vector<int> parent_;
  std::vector<double> prob_;
  std::vector<int> time_;
  std::vector<double> reach_;
  std::vector<std::vector<int>> children_;
  std::vector<int> order_;
  std::vector<int> leaves_;
  std::size_t depth_ = 0;
  int root_ = -1;
};

/// Per-node payoff triple (f, g, h) for one regime.
struct PayoffTriple {
  std::vector<double> f, g, h;

  std::size_t size() const noexcept { return f.size(); }
};

inline void validate_payoffs(const PayoffTriple& p, std::size_t nodes) {
  if (p.f.size() != nodes || p.g.size() != nodes || p.h.size() != nodes)
    throw Error(ErrorCode::ShapeMismatch, "payoff arrays must have one entry per tree node");
  for (std::size_t n = 0; n < nodes; ++n) {
    if (!std::isfinite(p.f[n]) || !std::isfinite(p.g[n]) || !std::isfinite(p.h[n]))
      throw Error(ErrorCode::InvalidPayoff, "non-finite payoff at node " + std::to_string(n));
    if (!(p.f[n] >= p.h[n] && p.h[n] >= p.g[n]))
      throw Error(ErrorCode::InvalidPayoff, "payoff order f >= h >= g fails at node " + std::to_string(n));
  }
}

/// Tree with a hidden binary regime: payoffs[i] applies when the regime is i,
/// and prior is the probability of regime 1.
struct ScenarioGame {
  TimeGrid grid;
  FiltrationTree tree;
  std::array<PayoffTriple, 2> payoffs;
  double prior = 0.5;

  double weight(int regime) const noexcept { return regime == 1 ? prior : 1.0 - prior; }

  void validate() const {
    if (grid.steps() != tree.depth())
      throw Error(ErrorCode::ShapeMismatch, "grid has " + std::to_string(grid.steps()) + " steps but tree depth is " + std::to_string(tree.depth()));
    if (!(prior >= 0.0 && prior <= 1.0)) throw Error(ErrorCode::OutOfRange, "prior must lie in [0,1]");
    validate_payoffs(payoffs[0], tree.size());
    validate_payoffs(payoffs[1], tree.size());
  }
};

/// Levels of a generating process, one per tree node.
struct GeneratingProcess {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t n) const { return values[n]; }
  double& operator[](std::size_t n) { return values[n]; }

  /// Level just before node n (0 at the root).
  double pre(const FiltrationTree& tree, int n) const {
    int par = tree.parent(n);
    return par < 0 ? 0.0 : values[par];
  }
  double increment(const FiltrationTree& tree, int n) const { return values[n] - pre(tree, n); }
};

/// Pure adapted stopping rule: stop[n] marks the node where the rule stops on
/// every path through n. Exactly one marked node per root-to-leaf path.
struct StoppingRule {
  std::vector<char> stop;
};

inline GeneratingProcess constant_process(const FiltrationTree& tree, double level) {
  return {std::vector<double>(tree.size(), level)};
}

/// Process jumping to 1 at the final time.
inline GeneratingProcess stop_at_horizon(const FiltrationTree& tree) {
  GeneratingProcess r = constant_process(tree, 0.0);
  for (int leaf : tree.leaves()) r[leaf] = 1.0;
  return r;
}

inline GeneratingProcess pure_process(const FiltrationTree& tree, const StoppingRule& rule) {
  if (rule.stop.size() != tree.size()) throw Error(ErrorCode::ShapeMismatch, "rule size differs from tree size");
  GeneratingProcess r = constant_process(tree, 0.0);
  for (int n : tree.order()) {
    int par = tree.parent(n);
    r[n] = (rule.stop[n] || (par >= 0 && r[par] == 1.0)) ? 1.0 : 0.0;
  }
  return r;
}

struct Violation {
  ErrorCode code;
  int node;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ErrorCode code) const {
    for (const auto& v : violations)
      if (v.code == code) return true;
    return false;
  }
};

inline ValidationReport validate_generating(const GeneratingProcess& rho, const FiltrationTree& tree) {
  ValidationReport rep;
  if (rho.size() != tree.size()) {
    rep.violations.push_back({ErrorCode::ShapeMismatch, -1,
                              "process has " + std::to_string(rho.size()) + " values, tree has " + std::to_string(tree.size()) + " nodes"});
    return rep;
  }
  for (int n : tree.order()) {
    double v = rho[n];
    if (!(v >= -kMonotoneTol && v <= 1.0 + kMonotoneTol))
      rep.violations.push_back({ErrorCode::OutOfRange, n, "value outside [0,1]"});
    if (rho.pre(tree, n) > v + kMonotoneTol)
      rep.violations.push_back({ErrorCode::NotMonotone, n, "decreases from parent"});
    if (tree.is_leaf(n) && std::abs(v - 1.0) > kMonotoneTol)
      rep.violations.push_back({ErrorCode::TerminalNotOne, n, "terminal value differs from 1"});
  }
  return rep;
}

/// First position k on the path with rho > z.
inline std::size_t sample_stopping_time(const GeneratingProcess& rho, const std::vector<int>& path, double z) {
  for (std::size_t k = 0; k < path.size(); ++k)
    if (rho[path[k]] > z) return k;
  return path.empty() ? 0 : path.size() - 1;
}

inline double realized_payoff(const PayoffTriple& pay, const std::vector<int>& path, std::size_t tau, std::size_t sigma) {
  if (tau >= path.size() || sigma >= path.size()) throw Error(ErrorCode::IndexOutOfRange, "stopping index beyond path length");
  if (tau < sigma) return pay.f[path[tau]];
  if (tau == sigma) return pay.h[path[tau]];
  return pay.g[path[sigma]];
}

/// Exact expected payoff for one regime: sum over nodes of
/// P(n) [ f (1-zeta) dxi + g (1-xi) dzeta + h dxi dzeta ].
inline double expected_payoff_exact(const FiltrationTree& tree, const PayoffTriple& pay,
                                    const GeneratingProcess& xi, const GeneratingProcess& zeta) {
  if (xi.size() != tree.size() || zeta.size() != tree.size() || pay.size() != tree.size())
    throw Error(ErrorCode::ShapeMismatch, "process or payoff size differs from tree size");
  double total = 0.0;
  for (int n : tree.order()) {
    double dxi = xi.increment(tree, n), dz = zeta.increment(tree, n);
    total += tree.reach(n) * (pay.f[n] * (1.0 - zeta[n]) * dxi + pay.g[n] * (1.0 - xi[n]) * dz + pay.h[n] * dxi * dz);
  }
  return total;
}

/// Prior-weighted payoff in the regime game.
inline double expected_payoff_exact(const ScenarioGame& game, const GeneratingProcess& xi0,
                                    const GeneratingProcess& xi1, const GeneratingProcess& zeta) {
  return game.weight(0) * expected_payoff_exact(game.tree, game.payoffs[0], xi0, zeta) +
         game.weight(1) * expected_payoff_exact(game.tree, game.payoffs[1], xi1, zeta);
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Draws a root-to-leaf path using the stream's uniforms.
inline std::vector<int> sample_path(const FiltrationTree& tree, RandomStream& rs) {
  std::vector<int> path{tree.root()};
  int n = tree.root();
  while (!tree.is_leaf(n)) {
    double u = rs.uniform();
    const auto& ch = tree.children(n);
    int pick = ch.back();
    double acc = 0.0;
    for (int c : ch) {
      acc += tree.prob(c);
      if (u < acc) {
        pick = c;
        break;
      }
    }
    n = pick;
    path.push_back(n);
  }
  return path;
}

/// Monte Carlo estimate of the expected payoff. Sample s uses stream s of the
/// device: the first two uniforms are the players' randomisation devices,
/// the remainder select the path.
inline MonteCarloEstimate expected_payoff_mc(const FiltrationTree& tree, const PayoffTriple& pay,
                                             const GeneratingProcess& xi, const GeneratingProcess& zeta,
                                             std::size_t n, const RandomDevice& device) {
  std::vector<double> draws(n);
  parallel_for(n, [&](std::size_t s) {
    RandomStream rs(device, s);
    double z1 = rs.uniform(), z2 = rs.uniform();
    auto path = sample_path(tree, rs);
    draws[s] = realized_payoff(pay, path, sample_stopping_time(xi, path, z1), sample_stopping_time(zeta, path, z2));
  });
  MonteCarloEstimate est;
  if (n == 0) return est;
  double sum = 0.0;
  for (double d : draws) sum += d;
  est.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double d : draws) ss += (d - est.mean) * (d - est.mean);
    est.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return est;
}

/// Restarts rho at the stopping time eta (given as a pure rule):
/// (rho - rho_{eta-}) / (1 - rho_{eta-}) from eta on, 0 before, with 0/0 = 1.
inline GeneratingProcess truncate_control(const GeneratingProcess& rho, const FiltrationTree& tree, const StoppingRule& eta) {
  if (rho.size() != tree.size() || eta.stop.size() != tree.size())
    throw Error(ErrorCode::ShapeMismatch, "process or rule size differs from tree size");
  GeneratingProcess out = constant_process(tree, 0.0);
  std::vector<double> base(tree.size(), -1.0);  // rho_{eta-} once eta has occurred
  for (int n : tree.order()) {
    int par = tree.parent(n);
    if (par >= 0 && base[par] >= 0.0)
      base[n] = base[par];
    else if (eta.stop[n])
      base[n] = rho.pre(tree, n);
    if (base[n] < 0.0) continue;
    double denom = 1.0 - base[n];
    out[n] = denom > 0.0 ? (rho[n] - base[n]) / denom : 1.0;
  }
  return out;
}

/// Stopping rule that stops at node n on every path through n, and at the
/// leaves of all other paths.
inline StoppingRule rule_at_node(const FiltrationTree& tree, int node) {
  StoppingRule r{std::vector<char>(tree.size(), 0)};
  r.stop[node] = 1;
  for (int leaf : tree.leaves())
    if (!tree.is_ancestor_or_self(node, leaf) && !tree.is_ancestor_or_self(leaf, node)) r.stop[leaf] = 1;
  return r;
}

}  // namespace asymdynkin
