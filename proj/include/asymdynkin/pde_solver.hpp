#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "diffusion_model.hpp"
#include "error.hpp"

namespace asymdynkin {

/// Uniform grid in (t, pi, x).
struct PDEGrid {
  std::size_t Mt = 2, Mp = 3, Mx = 3;
  double T = 1.0;
  double x_lo = -1.0, x_hi = 1.0;

  double t(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(Mt - 1); }
  double p(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(Mp - 1); }
  double x(std::size_t i) const { return x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(Mx - 1); }
  double dt() const { return T / static_cast<double>(Mt - 1); }
  double dp() const { return 1.0 / static_cast<double>(Mp - 1); }
  double dx() const { return (x_hi - x_lo) / static_cast<double>(Mx - 1); }
  std::size_t slice() const { return Mp * Mx; }
  std::size_t size() const { return Mt * Mp * Mx; }
  std::size_t index(std::size_t k, std::size_t j, std::size_t i) const { return (k * Mp + j) * Mx + i; }

  void validate() const {
    if (Mt < 2 || Mx < 3 || Mp < 3) throw Error(ErrorCode::ShapeMismatch, "grid needs Mt >= 2, Mpi >= 3, Mx >= 3");
    if (Mp % 2 == 0) throw Error(ErrorCode::ShapeMismatch, "Mpi must be odd so that pi = 1/2 is a grid point");
    if (!(x_hi > x_lo) || !(T > 0.0)) throw Error(ErrorCode::OutOfRange, "degenerate grid extent");
  }

  static PDEGrid for_model(const DiffusionModel& m, std::size_t Mt, std::size_t Mp, std::size_t Mx) {
    PDEGrid g{Mt, Mp, Mx, m.T, m.x_lo, m.x_hi};
    g.validate();
    return g;
  }
};

/// Values u0, u1, v on the full grid and the stopping sets.
struct PDESurfaces {
  PDEGrid grid;
  std::vector<double> u0, u1, v;
  std::vector<char> S0, S1, S;
  double identity_residual = 0.0;  // max |v - (pi u1 + (1-pi) u0)| on the joint continuation region
  std::size_t max_passes = 0;      // largest number of set-update passes over all slices
  std::size_t oscillating_slices = 0;  // slices whose set update had to be made monotone
  double max_clamp = 0.0;

  const std::vector<double>& field(int which) const { return which == 0 ? u0 : (which == 1 ? u1 : v); }

  /// Trilinear interpolation, clamped to the grid box. which: 0, 1 for u0, u1; 2 for v.
  double interp(int which, double t, double p, double x) const {
    const auto& F = field(which);
    auto locate = [](double s, std::size_t M, double lo, double hi, std::size_t& a, double& w) {
      double r = (std::clamp(s, lo, hi) - lo) / (hi - lo) * static_cast<double>(M - 1);
      a = std::min(static_cast<std::size_t>(r), M - 2);
      w = r - static_cast<double>(a);
    };
    std::size_t k, j, i;
    double wt, wp, wx;
    locate(t, grid.Mt, 0.0, grid.T, k, wt);
    locate(p, grid.Mp, 0.0, 1.0, j, wp);
    locate(x, grid.Mx, grid.x_lo, grid.x_hi, i, wx);
    double out = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          double w = (a ? wt : 1 - wt) * (b ? wp : 1 - wp) * (c ? wx : 1 - wx);
          if (w != 0.0) out += w * F[grid.index(k + a, j + b, i + c)];
        }
    return out;
  }

  /// Bilinear interpolation in (t, x) of a payoff sampled at the grid nodes,
  /// matching the interpolation error of the surfaces.
  double interp_payoff(const Expression& e, double t, double x) const {
    double rt = (std::clamp(t, 0.0, grid.T)) / grid.T * static_cast<double>(grid.Mt - 1);
    double rx = (std::clamp(x, grid.x_lo, grid.x_hi) - grid.x_lo) / (grid.x_hi - grid.x_lo) * static_cast<double>(grid.Mx - 1);
    std::size_t k = std::min(static_cast<std::size_t>(rt), grid.Mt - 2), i = std::min(static_cast<std::size_t>(rx), grid.Mx - 2);
    double wt = rt - static_cast<double>(k), wx = rx - static_cast<double>(i);
    double a = e(grid.x(i), grid.t(k)), b = e(grid.x(i + 1), grid.t(k));
    double c = e(grid.x(i), grid.t(k + 1)), d = e(grid.x(i + 1), grid.t(k + 1));
    return (1 - wt) * ((1 - wx) * a + wx * b) + wt * ((1 - wx) * c + wx * d);
  }
};

struct PDEOptions {
  double tol = 1e-8;
  std::size_t budget = 200;
  bool explicit_scheme = false;
  double cfl = 0.5;
};

namespace detail {

enum class Row : unsigned char { Pde, FixF, FixG, CopyDown, CopyUp, Fixed };

struct Stencil {
  std::array<int, 9> col{};
  std::array<double, 9> coef{};
  int n = 0;
  void add(int c, double a) {
    for (int k = 0; k < n; ++k)
      if (col[k] == c) {
        coef[k] += a;
        return;
      }
    col[n] = c;
    coef[n++] = a;
  }
};

// Discrete generator at every slice node for one measure.
class DiscreteGenerator {
 public:
  DiscreteGenerator(const DiffusionModel& m, const PDEGrid& g, Mode mode) : Mp_(g.Mp), Mx_(g.Mx), L_(g.slice()) {
    double dx = g.dx(), dp = g.dp();
    for (std::size_t j = 0; j < g.Mp; ++j)
      for (std::size_t i = 0; i < g.Mx; ++i) {
        auto c = m.coefficients(mode, g.p(j), g.x(i));
        Stencil& s = L_[j * Mx_ + i];
        int me = static_cast<int>(j * Mx_ + i);
        bool xb = i == 0 || i + 1 == g.Mx;
        bool pb = j == 0 || j + 1 == g.Mp;
        s.add(me, 0.0);
        // x direction; the boundary mirrors its inner neighbour
        if (!xb) {
          if (c.bx > 0) {
            s.add(me + 1, c.bx / dx);
            s.add(me, -c.bx / dx);
          } else {
            s.add(me, c.bx / dx);
            s.add(me - 1, -c.bx / dx);
          }
          s.add(me + 1, c.axx / (dx * dx));
          s.add(me - 1, c.axx / (dx * dx));
          s.add(me, -2 * c.axx / (dx * dx));
        } else {
          int inner = i == 0 ? me + 1 : me - 1;
          s.add(inner, 2 * c.axx / (dx * dx));
          s.add(me, -2 * c.axx / (dx * dx));
        }
        // pi direction; all pi coefficients vanish on the boundary
        if (!pb) {
          int up = me + static_cast<int>(Mx_), dn = me - static_cast<int>(Mx_);
          if (c.bp > 0) {
            s.add(up, c.bp / dp);
            s.add(me, -c.bp / dp);
          } else {
            s.add(me, c.bp / dp);
            s.add(dn, -c.bp / dp);
          }
          s.add(up, c.app / (dp * dp));
          s.add(dn, c.app / (dp * dp));
          s.add(me, -2 * c.app / (dp * dp));
          if (!xb && c.axp != 0.0) {
            double a = c.axp / (4 * dx * dp);
            s.add(up + 1, a);
            s.add(up - 1, -a);
            s.add(dn + 1, -a);
            s.add(dn - 1, a);
          }
        }
      }
  }

  const Stencil& at(std::size_t n) const { return L_[n]; }

  double apply(const std::vector<double>& u, std::size_t n) const {
    const Stencil& s = L_[n];
    double r = 0.0;
    for (int k = 0; k < s.n; ++k) r += s.coef[k] * u[static_cast<std::size_t>(s.col[k])];
    return r;
  }

  double max_diffusion() const {
    double m = 0.0;
    for (const auto& s : L_)
      for (int k = 0; k < s.n; ++k)
        if (s.coef[k] < 0) m = std::max(m, -s.coef[k]);
    return m;
  }

 private:
  std::size_t Mp_, Mx_;
  std::vector<Stencil> L_;
};

// Solves one implicit step with the given row kinds:
// Pde rows (I - dt L) u = prev; fixed rows u = value; copy rows u_n = u_{n -/+ Mx}.
inline std::vector<double> solve_rows(const DiscreteGenerator& L, const std::vector<Row>& kind, const std::vector<double>& prev,
                                      const std::vector<double>& fixed, double dt, std::size_t Mx) {
  std::size_t N = kind.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * 9);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(N));
  for (std::size_t n = 0; n < N; ++n) {
    int r = static_cast<int>(n);
    switch (kind[n]) {
      case Row::Pde: {
        const Stencil& s = L.at(n);
        for (int k = 0; k < s.n; ++k) trip.emplace_back(r, s.col[k], (s.col[k] == r ? 1.0 : 0.0) - dt * s.coef[k]);
        rhs[r] = prev[n];
        break;
      }
      case Row::CopyDown:
      case Row::CopyUp:
        trip.emplace_back(r, r, 1.0);
        trip.emplace_back(r, kind[n] == Row::CopyDown ? r - static_cast<int>(Mx) : r + static_cast<int>(Mx), -1.0);
        rhs[r] = 0.0;
        break;
      default:
        trip.emplace_back(r, r, 1.0);
        rhs[r] = fixed[n];
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "sparse factorization failed");
  Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "sparse solve failed");
  return {sol.data(), sol.data() + N};
}

}  // namespace detail

/// Backward solver for the coupled system of the informed values u0, u1 and
/// the uninformed value v. Each time slice is solved by policy iteration on
/// the stopping sets; see README for the row conventions.
inline PDESurfaces pde_solve_system(const DiffusionModel& m, const PDEGrid& grid, const PDEOptions& opt = {}) {
  grid.validate();
  const std::size_t Mp = grid.Mp, Mx = grid.Mx, N = grid.slice();
  detail::DiscreteGenerator L0(m, grid, Mode::Regime0), L1(m, grid, Mode::Regime1), Lo(m, grid, Mode::Observation);
  const double dt = grid.dt();

  PDESurfaces out;
  out.grid = grid;
  out.u0.assign(grid.size(), 0.0);
  out.u1.assign(grid.size(), 0.0);
  out.v.assign(grid.size(), 0.0);
  out.S0.assign(grid.size(), 0);
  out.S1.assign(grid.size(), 0);
  out.S.assign(grid.size(), 0);

  if (opt.explicit_scheme) {
    double lim = std::max({L0.max_diffusion(), L1.max_diffusion(), Lo.max_diffusion()});
    if (dt * lim > opt.cfl)
      throw Error(ErrorCode::CFLViolation, "explicit step dt = " + std::to_string(dt) + " exceeds the stability bound " +
                                               std::to_string(opt.cfl / lim));
  }

  std::vector<double> F(N), G(N), H(N), P(N);
  auto load_payoffs = [&](std::size_t k) {
    double t = grid.t(k);
    for (std::size_t i = 0; i < Mx; ++i) {
      double x = grid.x(i), fv = m.f(x, t), gv = m.g(x, t), hv = m.h(x, t);
      for (std::size_t j = 0; j < Mp; ++j) {
        F[j * Mx + i] = fv;
        G[j * Mx + i] = gv;
        H[j * Mx + i] = hv;
        P[j * Mx + i] = grid.p(j);
      }
    }
  };

  // terminal slice
  std::size_t K = grid.Mt - 1;
  load_payoffs(K);
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t g = K * N + n;
    out.u0[g] = out.u1[g] = out.v[g] = H[n];
  }

  std::vector<double> pu0(N), pu1(N), pv(N);
  std::vector<char> s0(N, 0), s1(N, 0), s(N, 0);
  std::vector<detail::Row> kind(N);
  std::vector<double> fixed(N);

  for (std::size_t k = K; k-- > 0;) {
    load_payoffs(k);
    for (std::size_t n = 0; n < N; ++n) {
      std::size_t g = (k + 1) * N + n;
      pu0[n] = out.u0[g];
      pu1[n] = out.u1[g];
      pv[n] = out.v[g];
    }
    std::vector<double> u0, u1, v;

    if (opt.explicit_scheme) {
      u0.resize(N);
      u1.resize(N);
      v.resize(N);
      for (std::size_t n = 0; n < N; ++n) {
        double c0 = pu0[n] + dt * L0.apply(pu0, n), c1 = pu1[n] + dt * L1.apply(pu1, n), cv = pv[n] + dt * Lo.apply(pv, n);
        s[n] = cv < G[n];
        s0[n] = !s[n] && c0 > F[n];
        s1[n] = !s[n] && c1 > F[n];
        u0[n] = s[n] ? G[n] : std::min(c0, F[n]);
        u1[n] = s[n] ? G[n] : std::min(c1, F[n]);
        v[n] = s[n] ? G[n] : cv;
      }
      // flat belief direction where the other incarnation acts
      for (std::size_t j = 1; j < Mp; ++j)
        for (std::size_t i = 0; i < Mx; ++i) {
          std::size_t n = j * Mx + i;
          if (s1[n] && !s0[n] && !s[n]) u0[n] = u0[n - Mx];
        }
      for (std::size_t j = Mp - 1; j-- > 0;)
        for (std::size_t i = 0; i < Mx; ++i) {
          std::size_t n = j * Mx + i;
          if (s0[n] && !s1[n] && !s[n]) u1[n] = u1[n + Mx];
        }
      for (std::size_t n = 0; n < N; ++n)
        if (!s[n] && (s0[n] || s1[n])) v[n] = P[n] * u1[n] + (1 - P[n]) * u0[n];
    } else {
      // a repeated set configuration means the update oscillates; from then on
      // sets may only grow, which terminates
      bool monotone = false;
      std::vector<char> hist[2];
      std::size_t pass = 0, last_changed = 0;
      for (;; ++pass) {
        if (pass >= opt.budget)
          throw Error(ErrorCode::NoConvergence, "slice t = " + std::to_string(grid.t(k)) + " did not settle within " +
                                                    std::to_string(opt.budget) + " passes; last pass moved " +
                                                    std::to_string(last_changed) + " set memberships");
        // informed values
        for (int inc = 0; inc < 2; ++inc) {
          const auto& own = inc == 0 ? s0 : s1;
          const auto& other = inc == 0 ? s1 : s0;
          for (std::size_t n = 0; n < N; ++n) {
            std::size_t j = n / Mx;
            if (s[n]) {
              kind[n] = detail::Row::FixG;
              fixed[n] = G[n];
            } else if (own[n]) {
              kind[n] = detail::Row::FixF;
              fixed[n] = F[n];
            } else if (other[n] && inc == 0 && j > 0) {
              kind[n] = detail::Row::CopyDown;
            } else if (other[n] && inc == 1 && j + 1 < Mp) {
              kind[n] = detail::Row::CopyUp;
            } else {
              kind[n] = detail::Row::Pde;
            }
          }
          auto sol = detail::solve_rows(inc == 0 ? L0 : L1, kind, inc == 0 ? pu0 : pu1, fixed, dt, Mx);
          (inc == 0 ? u0 : u1) = std::move(sol);
        }
        // uninformed value
        for (std::size_t n = 0; n < N; ++n) {
          if (s[n]) {
            kind[n] = detail::Row::FixG;
            fixed[n] = G[n];
          } else if (s0[n] || s1[n]) {
            kind[n] = detail::Row::Fixed;
            fixed[n] = P[n] * u1[n] + (1 - P[n]) * u0[n];
          } else {
            kind[n] = detail::Row::Pde;
          }
        }
        v = detail::solve_rows(Lo, kind, pv, fixed, dt, Mx);

        // policy update; exact ties keep the continuation rows
        std::size_t changed = 0;
        for (int inc = 0; inc < 2; ++inc) {
          auto& own = inc == 0 ? s0 : s1;
          const auto& u = inc == 0 ? u0 : u1;
          const auto& prev = inc == 0 ? pu0 : pu1;
          const auto& Lg = inc == 0 ? L0 : L1;
          for (std::size_t n = 0; n < N; ++n) {
            char next;
            if (s[n]) {
              next = monotone ? own[n] : 0;
            } else {
              double pde = u[n] - dt * Lg.apply(u, n) - prev[n];
              next = (u[n] - F[n]) > pde + opt.tol ? 1 : ((u[n] - F[n]) > pde - opt.tol ? own[n] : 0);
            }
            if (monotone) next = std::max(next, own[n]);
            if (next != own[n]) {
              own[n] = next;
              ++changed;
            }
          }
        }
        for (std::size_t n = 0; n < N; ++n) {
          double pde = v[n] - dt * Lo.apply(v, n) - pv[n];
          char next = (v[n] - G[n]) < pde - opt.tol ? 1 : ((v[n] - G[n]) < pde + opt.tol ? s[n] : 0);
          if (monotone) next = std::max(next, s[n]);
          if (next != s[n]) {
            s[n] = next;
            ++changed;
          }
        }
        if (!changed) break;
        last_changed = changed;
        if (!monotone) {
          std::vector<char> state(s);
          state.insert(state.end(), s0.begin(), s0.end());
          state.insert(state.end(), s1.begin(), s1.end());
          if (state == hist[0]) {
            monotone = true;
            ++out.oscillating_slices;
          }
          hist[0] = std::move(hist[1]);
          hist[1] = std::move(state);
        }
      }
      out.max_passes = std::max(out.max_passes, pass + 1);
      for (std::size_t n = 0; n < N; ++n)
        if (s[n]) s0[n] = s1[n] = 0;
    }

    for (std::size_t n = 0; n < N; ++n) {
      std::size_t g = k * N + n;
      out.u0[g] = u0[n];
      out.u1[g] = u1[n];
      out.v[g] = v[n];
      out.S0[g] = s0[n];
      out.S1[g] = s1[n];
      out.S[g] = s[n];
      if (!s[n] && !s0[n] && !s1[n])
        out.identity_residual = std::max(out.identity_residual, std::abs(v[n] - (P[n] * u1[n] + (1 - P[n]) * u0[n])));
    }
  }
  return out;
}

/// Independent one-dimensional double-obstacle solver for the full-information
/// game with drift mu and volatility sigma: g <= u <= f, terminal h.
/// Crank-Nicolson with two implicit start-up half steps per step for the first
/// step, projected SOR for the obstacle problem, central differences, and
/// reflecting boundaries. Returns u on the (t, x) grid, index k * Mx + i.
inline std::vector<double> reference_dynkin_1d(const Expression& mu, const Expression& sigma, const Expression& f,
                                               const Expression& g, const Expression& h, double T, double x_lo, double x_hi,
                                               std::size_t Mt, std::size_t Mx) {
  const double dx = (x_hi - x_lo) / static_cast<double>(Mx - 1);
  const double dT = T / static_cast<double>(Mt - 1);
  std::vector<double> lo(Mx), md(Mx), up(Mx);  // generator: lo u_{i-1} + md u_i + up u_{i+1}
  for (std::size_t i = 0; i < Mx; ++i) {
    double x = x_lo + dx * static_cast<double>(i);
    double a = 0.5 * sigma(x) * sigma(x) / (dx * dx), b = mu(x) / (2 * dx);
    if (i == 0 || i + 1 == Mx) {
      lo[i] = up[i] = a;  // both neighbours resolve to the mirrored node
      md[i] = -2 * a;
    } else {
      lo[i] = a - b;
      up[i] = a + b;
      md[i] = -2 * a;
    }
  }
  auto nb = [&](const std::vector<double>& u, std::size_t i, bool left) {
    if (left) return i == 0 ? u[1] : u[i - 1];
    return i + 1 == Mx ? u[Mx - 2] : u[i + 1];
  };
  auto Lu = [&](const std::vector<double>& u, std::size_t i) {
    return lo[i] * nb(u, i, true) + md[i] * u[i] + up[i] * nb(u, i, false);
  };
  std::vector<double> out(Mt * Mx);
  std::vector<double> u(Mx), lb(Mx), ub(Mx), rhs(Mx);
  for (std::size_t i = 0; i < Mx; ++i) u[i] = h(x_lo + dx * static_cast<double>(i), T);
  std::copy(u.begin(), u.end(), out.begin() + static_cast<std::ptrdiff_t>((Mt - 1) * Mx));

  // one theta-step of size d from u to the new u at time t
  auto step = [&](double t, double d, double theta) {
    for (std::size_t i = 0; i < Mx; ++i) {
      double x = x_lo + dx * static_cast<double>(i);
      lb[i] = g(x, t);
      ub[i] = f(x, t);
      rhs[i] = u[i] + (1 - theta) * d * Lu(u, i);
    }
    std::vector<double> w = u;
    const double omega = 1.5;
    for (int sweep = 0; sweep < 100000; ++sweep) {
      double change = 0.0;
      for (std::size_t i = 0; i < Mx; ++i) {
        double diag = 1 - theta * d * md[i];
        double off = -theta * d * (lo[i] * nb(w, i, true) + up[i] * nb(w, i, false));
        double gs = (rhs[i] - off) / diag;
        double nv = std::clamp(w[i] + omega * (gs - w[i]), lb[i], ub[i]);
        change = std::max(change, std::abs(nv - w[i]));
        w[i] = nv;
      }
      if (change < 1e-13) break;
    }
    u = w;
  };

  for (std::size_t k = Mt - 1; k-- > 0;) {
    double t = dT * static_cast<double>(k);
    if (k + 1 == Mt - 1) {
      // start-up: four implicit quarter steps damp the terminal kinks
      for (int q = 3; q >= 0; --q) step(t + 0.25 * dT * q, 0.25 * dT, 1.0);
    } else {
      step(t, dT, 0.5);
    }
    std::copy(u.begin(), u.end(), out.begin() + static_cast<std::ptrdiff_t>(k * Mx));
  }
  return out;
}

}  // namespace asymdynkin
