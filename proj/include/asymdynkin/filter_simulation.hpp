#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diffusion_model.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace asymdynkin {

/// Simulated (X, psi) paths, recorded every `stride` steps (and at the end).
/// Arrays are row-major: path p, record r at index p * records() + r.
struct PathBundle {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t stride = 1;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::vector<double> times;
  std::vector<double> X, psi;
  std::vector<int> J;              // regime label, -1 under the observation measure
  std::vector<char> exited;        // left the declared x-domain at some step
  std::vector<double> psi_filter;  // filter-SDE posterior on regime paths
  double max_clamp = 0.0;          // largest pre-clamp excursion of psi outside [0,1]
  double rms_filter_gap = 0.0;     // RMS over paths and steps of psi - psi_filter

  std::size_t records() const noexcept { return times.size(); }
  double x_at(std::size_t p, std::size_t r) const { return X[p * records() + r]; }
  double psi_at(std::size_t p, std::size_t r) const { return psi[p * records() + r]; }
};

struct SimulationOptions {
  std::size_t stride = 1;
  std::optional<int> regime;  // fix the regime instead of drawing it
  std::optional<double> x0, psi0;
  std::uint64_t stream_offset = 0;  // path p draws from stream stream_offset + p
};

namespace detail {

inline std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::OutOfRange, "dt must be positive");
  double k = std::round(T / dt);
  if (k < 1.0) throw Error(ErrorCode::OutOfRange, "dt exceeds the horizon");
  return static_cast<std::size_t>(k);
}

inline void init_bundle(PathBundle& b, std::size_t n, double dt, std::size_t steps, std::size_t stride, std::uint64_t seed) {
  b.dt = dt;
  b.steps = steps;
  b.stride = std::max<std::size_t>(stride, 1);
  b.seed = seed;
  b.paths = n;
  for (std::size_t k = 0; k <= steps; ++k)
    if (k % b.stride == 0 || k == steps) b.times.push_back(static_cast<double>(k) * dt);
  b.X.assign(n * b.records(), 0.0);
  b.psi.assign(n * b.records(), 0.0);
  b.J.assign(n, -1);
  b.exited.assign(n, 0);
}

inline double clamp_unit(double v, double& excursion) {
  if (v < 0.0) {
    excursion = std::max(excursion, -v);
    return 0.0;
  }
  if (v > 1.0) {
    excursion = std::max(excursion, v - 1.0);
    return 1.0;
  }
  return v;
}

}  // namespace detail

/// Euler-Maruyama for the state and its posterior under the observation
/// measure, driven by one innovation increment per step.
inline PathBundle simulate_filter_paths(const DiffusionModel& m, std::size_t n, double dt, const RandomDevice& device,
                                        const SimulationOptions& opt = {}) {
  PathBundle b;
  std::size_t steps = detail::step_count(m.T, dt);
  detail::init_bundle(b, n, dt, steps, opt.stride, device.seed());
  std::vector<double> clamp(n, 0.0);
  const double sq = std::sqrt(dt);
  const std::size_t R = b.records();
  parallel_for(n, [&](std::size_t p) {
    RandomStream rs(device, opt.stream_offset + p);
    double x = opt.x0.value_or(m.x0), psi = opt.psi0.value_or(m.pi);
    std::size_t r = 0;
    b.X[p * R] = x;
    b.psi[p * R] = psi;
    for (std::size_t k = 1; k <= steps; ++k) {
      double dB = sq * rs.normal();
      double s = m.sigma(x), m0 = m.mu0(x), m1 = m.mu1(x);
      double w = (m1 - m0) / s;
      double nx = x + ((1.0 - psi) * m0 + psi * m1) * dt + s * dB;
      psi = detail::clamp_unit(psi + w * psi * (1.0 - psi) * dB, clamp[p]);
      x = nx;
      if (x < m.x_lo || x > m.x_hi) b.exited[p] = 1;
      if (k % b.stride == 0 || k == steps) {
        ++r;
        b.X[p * R + r] = x;
        b.psi[p * R + r] = psi;
      }
    }
  });
  for (double c : clamp) b.max_clamp = std::max(b.max_clamp, c);
  return b;
}

/// Regime drawn from the prior (or fixed), state driven by its own drift, and
/// the posterior computed by the likelihood ratio of the two drifts along the
/// discretized path. The filter SDE is run alongside on the innovation
/// reconstructed from the same increments.
inline PathBundle simulate_regime_paths(const DiffusionModel& m, std::size_t n, double dt, const RandomDevice& device,
                                        const SimulationOptions& opt = {}) {
  PathBundle b;
  std::size_t steps = detail::step_count(m.T, dt);
  detail::init_bundle(b, n, dt, steps, opt.stride, device.seed());
  b.psi_filter.assign(n * b.records(), 0.0);
  std::vector<double> clamp(n, 0.0), sqgap(n, 0.0);
  const double sq = std::sqrt(dt);
  const std::size_t R = b.records();
  const double prior = opt.psi0.value_or(m.pi);
  const bool degenerate_prior = prior <= 0.0 || prior >= 1.0;
  const double logit0 = degenerate_prior ? 0.0 : std::log(prior / (1.0 - prior));
  parallel_for(n, [&](std::size_t p) {
    RandomStream rs(device, opt.stream_offset + p);
    double u = rs.uniform();
    int J = opt.regime ? *opt.regime : (u < prior ? 1 : 0);
    b.J[p] = J;
    double x = opt.x0.value_or(m.x0), ell = 0.0, psi = prior, pf = prior;
    std::size_t r = 0;
    b.X[p * R] = x;
    b.psi[p * R] = psi;
    b.psi_filter[p * R] = pf;
    for (std::size_t k = 1; k <= steps; ++k) {
      double dW = sq * rs.normal();
      double s = m.sigma(x), m0 = m.mu0(x), m1 = m.mu1(x);
      double dX = (J == 1 ? m1 : m0) * dt + s * dW;
      ell += (m1 - m0) / (s * s) * dX - 0.5 * (m1 * m1 - m0 * m0) / (s * s) * dt;
      double dB = (dX - ((1.0 - pf) * m0 + pf * m1) * dt) / s;
      pf = detail::clamp_unit(pf + (m1 - m0) / s * pf * (1.0 - pf) * dB, clamp[p]);
      psi = degenerate_prior ? prior : 1.0 / (1.0 + std::exp(-(logit0 + ell)));
      x += dX;
      sqgap[p] += (psi - pf) * (psi - pf);
      if (x < m.x_lo || x > m.x_hi) b.exited[p] = 1;
      if (k % b.stride == 0 || k == steps) {
        ++r;
        b.X[p * R + r] = x;
        b.psi[p * R + r] = psi;
        b.psi_filter[p * R + r] = pf;
      }
    }
  });
  double tot = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    b.max_clamp = std::max(b.max_clamp, clamp[p]);
    tot += sqgap[p];
  }
  b.rms_filter_gap = std::sqrt(tot / (static_cast<double>(n) * static_cast<double>(steps)));
  return b;
}

/// Smooth test function of (pi, x) with its derivatives.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> value, d_x, d_p, d_xx, d_pp, d_xp;
};

inline std::vector<TestFunction> standard_test_functions() {
  auto zero = [](double, double) { return 0.0; };
  return {
      {"x", [](double, double x) { return x; }, [](double, double) { return 1.0; }, zero, zero, zero, zero},
      {"x^2", [](double, double x) { return x * x; }, [](double, double x) { return 2 * x; }, zero,
       [](double, double) { return 2.0; }, zero, zero},
      {"pi", [](double p, double) { return p; }, zero, [](double, double) { return 1.0; }, zero, zero, zero},
      {"pi^2", [](double p, double) { return p * p; }, zero, [](double p, double) { return 2 * p; }, zero,
       [](double, double) { return 2.0; }, zero},
      {"pi*x", [](double p, double x) { return p * x; }, [](double p, double) { return p; },
       [](double, double x) { return x; }, zero, zero, [](double, double) { return 1.0; }},
      {"sin(x)*pi^2", [](double p, double x) { return std::sin(x) * p * p; },
       [](double p, double x) { return std::cos(x) * p * p; }, [](double p, double x) { return 2 * p * std::sin(x); },
       [](double p, double x) { return -std::sin(x) * p * p; }, [](double, double x) { return 2 * std::sin(x); },
       [](double p, double x) { return 2 * p * std::cos(x); }},
  };
}

inline double analytic_generator(const DiffusionModel& m, const TestFunction& phi, Mode mode, double p, double x) {
  auto c = m.coefficients(mode, p, x);
  return c.bx * phi.d_x(p, x) + c.bp * phi.d_p(p, x) + c.axx * phi.d_xx(p, x) + c.app * phi.d_pp(p, x) +
         c.axp * phi.d_xp(p, x);
}

struct GeneratorCheck {
  double mc_drift = 0.0;
  double stderr_ = 0.0;
  double analytic = 0.0;
  double discrepancy = 0.0;
  bool within(double k = 4.0) const { return discrepancy <= k * stderr_ + 1e-10; }
};

/// One Euler step from (pi, x) under the chosen measure; the Monte Carlo
/// drift (E[phi(step)] - phi) / dt, with the Brownian increment as a control
/// variate, is compared with the analytic generator.
inline GeneratorCheck generator_check(const DiffusionModel& m, const TestFunction& phi, double p, double x, Mode mode,
                                      std::size_t n, double dt, const RandomDevice& device) {
  double s = m.sigma(x), m0 = m.mu0(x), m1 = m.mu1(x);
  double w = (m1 - m0) / s, bar = (1.0 - p) * m0 + p * m1;
  double drift = mode == Mode::Observation ? bar : (mode == Mode::Regime1 ? m1 : m0);
  double phi0 = phi.value(p, x), sq = std::sqrt(dt);
  std::vector<double> incr(n), noise(n);
  parallel_for(n, [&](std::size_t k) {
    RandomStream rs(device, k);
    double dW = sq * rs.normal();
    double nx = x + drift * dt + s * dW;
    double np = p + w * p * (1.0 - p) * (dW + (drift - bar) / s * dt);
    incr[k] = phi.value(np, nx) - phi0;
    noise[k] = dW;
  });
  // regression on the Brownian increment removes the first-order noise
  double mi = 0.0, mw = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mi += incr[k];
    mw += noise[k];
  }
  mi /= static_cast<double>(n);
  mw /= static_cast<double>(n);
  double cov = 0.0, var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cov += (incr[k] - mi) * (noise[k] - mw);
    var += (noise[k] - mw) * (noise[k] - mw);
  }
  double beta = cov / var, mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    incr[k] -= beta * noise[k];
    mean += incr[k];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : incr) ss += (v - mean) * (v - mean);
  GeneratorCheck out;
  out.mc_drift = mean / dt;
  out.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) / dt;
  out.analytic = analytic_generator(m, phi, mode, p, x);
  out.discrepancy = std::abs(out.mc_drift - out.analytic);
  return out;
}

}  // namespace asymdynkin
