#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "expression.hpp"

namespace asymdynkin {

/// Measure under which the pair (X, psi) evolves: the observation measure
/// (drift averaged by the posterior) or one of the regime measures.
enum class Mode { Observation, Regime0, Regime1 };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Observation: return "observation";
    case Mode::Regime0: return "regime-0";
    case Mode::Regime1: return "regime-1";
  }
  return "?";
}

/// Coefficients of a second-order operator in (x, pi):
/// bx d_x + bp d_pi + axx d_xx + app d_pipi + axp d_xpi.
struct GeneratorCoefficients {
  double bx = 0.0, bp = 0.0, axx = 0.0, app = 0.0, axp = 0.0;
};

/// Two-regime diffusion dX = mu_J(X) dt + sigma(X) dW with payoffs
/// f >= h >= g as functions of (t, x).
struct DiffusionModel {
  Expression mu0{0.0}, mu1{0.0}, sigma{1.0};
  Expression f{0.0}, g{0.0}, h{0.0};
  double x0 = 0.0;
  double pi = 0.5;
  double T = 1.0;
  double x_lo = -1.0, x_hi = 1.0;
  double sigma_min = 1e-8;

  double mu(int regime, double x) const { return regime == 1 ? mu1(x) : mu0(x); }
  double mubar(double x, double p) const { return (1.0 - p) * mu0(x) + p * mu1(x); }
  double vol(double x) const { return sigma(x); }
  /// Signal-to-noise ratio, evaluated at the state.
  double snr(double x) const { return (mu1(x) - mu0(x)) / sigma(x); }

  GeneratorCoefficients coefficients(Mode mode, double p, double x) const {
    double s = sigma(x), m0 = mu0(x), m1 = mu1(x);
    double w = (m1 - m0) / s;
    double q = p * (1.0 - p);
    GeneratorCoefficients c;
    c.axx = 0.5 * s * s;
    c.app = 0.5 * w * w * q * q;
    c.axp = s * w * q;
    switch (mode) {
      case Mode::Observation:
        c.bx = (1.0 - p) * m0 + p * m1;
        break;
      case Mode::Regime1:
        c.bx = m1;
        c.bp = w * w * p * (1.0 - p) * (1.0 - p);
        break;
      case Mode::Regime0:
        c.bx = m0;
        c.bp = -w * w * p * p * (1.0 - p);
        break;
    }
    return c;
  }

  /// Finite-sampling checks of the standing assumptions on the domain.
  void validate() const {
    if (!(x_hi > x_lo)) throw Error(ErrorCode::OutOfRange, "domain must satisfy lo < hi");
    if (!(T > 0.0)) throw Error(ErrorCode::OutOfRange, "horizon must be positive");
    if (!(pi >= 0.0 && pi <= 1.0)) throw Error(ErrorCode::OutOfRange, "pi must lie in [0,1]");
    if (x0 < x_lo || x0 > x_hi) throw Error(ErrorCode::OutOfRange, "x0 outside the domain");
    const int K = 401;
    for (int a = 0; a < K; ++a) {
      double x = x_lo + (x_hi - x_lo) * a / (K - 1);
      double s = sigma(x);
      if (!(s >= sigma_min) || !std::isfinite(s))
        throw Error(ErrorCode::OutOfRange, "sigma below its lower bound at x = " + std::to_string(x));
      if (!std::isfinite(mu0(x)) || !std::isfinite(mu1(x))) throw Error(ErrorCode::OutOfRange, "non-finite drift");
      for (int b = 0; b < 11; ++b) {
        double t = T * b / 10.0;
        double fv = f(x, t), gv = g(x, t), hv = h(x, t);
        if (!(fv >= hv - 1e-12 && hv >= gv - 1e-12))
          throw Error(ErrorCode::InvalidPayoff, "payoff order f >= h >= g fails at (t, x) = (" + std::to_string(t) + ", " + std::to_string(x) + ")");
      }
    }
  }
};

}  // namespace asymdynkin
