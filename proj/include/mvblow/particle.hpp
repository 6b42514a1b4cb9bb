#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mvblow/cascade.hpp"
#include "mvblow/loss_path.hpp"
#include "mvblow/model.hpp"

namespace mvblow {

// Default registration threshold for a single-step loss increment.
inline double default_jump_threshold(double dt, double alpha) {
  double scale = alpha > 1.0 ? alpha : 1.0;
  return 10.0 * std::sqrt(dt) * scale;
}

struct SimOptions {
  double jump_threshold = -1.0;  // negative: use default_jump_threshold
  bool bridge_correction = true; // within-step crossing detection
  int threads = 0;               // 0: MVBLOW_THREADS or 1
  bool collect_reports = true;
};

struct SimResult {
  LossPath path;
  std::vector<CascadeReport> reports;
  std::size_t n = 0;
  double dt = 0.0;
};

// One interacting default round after a diffusion step: marks every alive
// position at or below 0 defaulted, shifts the remaining alive positions by
// alpha * (new defaults)/n_total, repeats until no new defaults. Returns the
// number of defaults this step; positions of survivors carry the full shift.
std::size_t cascade_step(std::vector<double>& x, std::vector<std::uint8_t>& alive,
                         double alpha, std::size_t n_total);

// Euler scheme with end-of-step default detection, optional Brownian-bridge
// crossing correction, and the cascade resolution above after every step.
// Reproducible for fixed (seed, n, dt) regardless of thread count.
SimResult simulate(const ModelParams& params, std::size_t n, double dt,
                   double horizon, std::uint64_t seed,
                   const SimOptions& opt = {});

struct ConvergenceRow {
  std::size_t n = 0;
  double mean_sup = 0.0;        // mean over reps of sup_t |L^N - ref|
  double ci_lo = 0.0;           // bootstrap 95% interval for mean_sup
  double ci_hi = 0.0;
  double one_sided_excess = 0.0;  // max_t [mean(ref - L^N) - 3 SE]^+, pre-jump
};

std::vector<ConvergenceRow> convergence_study(
    const ModelParams& params, const std::vector<std::size_t>& n_list,
    double dt, double horizon, std::size_t reps, std::uint64_t seed,
    const LossPath& reference, const SimOptions& opt = {});

}  // namespace mvblow
