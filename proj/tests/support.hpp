#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include <asymdynkin/game_core.hpp>
#include <asymdynkin/random.hpp>

namespace testsupport {

using namespace asymdynkin;

// Binary tree of the given depth with random transition probabilities and
// ordered payoffs g <= h <= f drawn from [-1, 1].
inline ScenarioGame random_game(std::uint64_t seed, std::size_t depth, double prior) {
  RandomStream rs(RandomDevice(seed), 0);
  std::size_t internal = (std::size_t{1} << depth) - 1;
  std::vector<double> up(internal);
  for (auto& q : up) q = 0.1 + 0.8 * rs.uniform();
  ScenarioGame g;
  g.tree = FiltrationTree::binary(depth, up);
  g.grid = TimeGrid::uniform(depth, 1.0);
  g.prior = prior;
  for (int i = 0; i < 2; ++i) {
    auto& p = g.payoffs[i];
    for (std::size_t n = 0; n < g.tree.size(); ++n) {
      std::array<double, 3> v{2 * rs.uniform() - 1, 2 * rs.uniform() - 1, 2 * rs.uniform() - 1};
      std::sort(v.begin(), v.end());
      p.g.push_back(v[0]);
      p.h.push_back(v[1]);
      p.f.push_back(v[2]);
    }
  }
  return g;
}

// Random valid generating process: each node adds a random share of the
// remaining mass, with some nodes forced to jump fully.
inline GeneratingProcess random_process(const FiltrationTree& tree, RandomStream& rs) {
  GeneratingProcess r = constant_process(tree, 0.0);
  for (int n : tree.order()) {
    double pre = r.pre(tree, n);
    if (tree.is_leaf(n)) {
      r[n] = 1.0;
      continue;
    }
    double u = rs.uniform();
    double share = u < 0.3 ? 0.0 : (u < 0.4 ? 1.0 : rs.uniform());
    r[n] = pre + (1.0 - pre) * share;
  }
  return r;
}

// Full enumeration over (path, tau atom, sigma atom).
inline double enumerated_payoff(const FiltrationTree& tree, const PayoffTriple& pay, const GeneratingProcess& xi,
                                const GeneratingProcess& zeta) {
  double total = 0.0;
  for (const auto& path : tree.paths()) {
    double pp = tree.reach(path.back());
    for (std::size_t k = 0; k < path.size(); ++k) {
      double a = xi.increment(tree, path[k]);
      if (a == 0.0) continue;
      for (std::size_t l = 0; l < path.size(); ++l) {
        double b = zeta.increment(tree, path[l]);
        if (b == 0.0) continue;
        total += pp * a * b * realized_payoff(pay, path, k, l);
      }
    }
  }
  return total;
}

}  // namespace testsupport
