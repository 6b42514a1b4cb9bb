#pragma once

#include <functional>

#include "mvblow/measure.hpp"

namespace mvblow {

// Problem data: feedback strength, initial condition, and optional
// time-dependent coefficients. Null callables mean b = 0, sigma = 1.
struct ModelParams {
  double alpha = 0.0;
  Measure1D initial;
  std::function<double(double)> drift;            // b(t)
  std::function<double(double, double)> drift_x;  // b(t, x), particle runs only
  std::function<double(double)> sigma;            // sigma(t)
  double sigma_lo = 1.0;
  double sigma_hi = 1.0;
  DecayProfile profile;  // optional near-origin envelope (beta > 0 when set)

  bool constant_coefficients() const {
    return !drift && !drift_x && !sigma;
  }
  double drift_at(double t) const { return drift ? drift(t) : 0.0; }
  double sigma_at(double t) const { return sigma ? sigma(t) : 1.0; }
  bool has_profile() const { return profile.beta > 0.0; }

  // alpha >= 0, a nonempty initial law, sigma within its declared bounds on
  // [0, horizon]. Throws std::invalid_argument.
  void validate(double horizon) const;
};

// Convenience builders for the profile family used across studies:
// density C x^beta up to x_star, then constant D, truncated to unit mass.
Measure1D profile_measure(double C, double D, double x_star, double beta,
                          std::size_t cells = 400);

inline Measure1D profile_measure(double beta, std::size_t cells = 400) {
  return profile_measure(1.0 + beta, 1.0 + beta, 1.0, beta, cells);
}

}  // namespace mvblow
