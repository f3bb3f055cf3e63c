#pragma once

#include <asymdynkin/diffusion_model.hpp>

namespace testsupport {

// Both regimes share the drift, so the posterior never moves.
inline asymdynkin::DiffusionModel degenerate_model(double pi = 0.5) {
  asymdynkin::DiffusionModel m;
  m.mu0 = asymdynkin::Expression("0.1");
  m.mu1 = asymdynkin::Expression("0.1");
  m.sigma = asymdynkin::Expression("0.5");
  m.g = asymdynkin::Expression("tanh(x)");
  m.h = asymdynkin::Expression("tanh(x) + 0.1");
  m.f = asymdynkin::Expression("tanh(x) + 0.3");
  m.x0 = 0.0;
  m.pi = pi;
  m.T = 1.0;
  m.x_lo = -2.0;
  m.x_hi = 2.0;
  return m;
}

inline asymdynkin::DiffusionModel generic_model(double pi = 0.5) {
  auto m = degenerate_model(pi);
  m.mu0 = asymdynkin::Expression("-0.2");
  m.mu1 = asymdynkin::Expression("0.3");
  m.sigma = asymdynkin::Expression("0.4");
  return m;
}

}  // namespace testsupport
