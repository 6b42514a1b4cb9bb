#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "mvblow/cascade.hpp"
#include "mvblow/loss_path.hpp"
#include "mvblow/measure.hpp"
#include "mvblow/model.hpp"

namespace mvblow {

// Uniform node grid on [0, x_max] for the surviving density. v[0] sits on
// the absorbing boundary and is always 0; v[nx] is the far edge, closed with
// a zero-gradient condition. Mass and cdf read the first cell as a constant
// block at v[1] and the rest by the trapezoid rule, matching to_measure
// exactly; from_measure fills v[1] so the tabulated total is the measure's.
struct DensityGrid {
  double x_max = 0.0;
  std::size_t nx = 0;
  double h = 0.0;
  std::vector<double> v;    // nx + 1 node values
  double loss = 0.0;        // absorbed mass, including any starting loss
  double clip_total = 0.0;  // undershoot mass removed by clipping

  static DensityGrid from_measure(const Measure1D& mu, double x_max,
                                  std::size_t nx);
  static DensityGrid from_function(const std::function<double(double)>& f,
                                   double x_max, std::size_t nx);

  double mass() const;
  double max_value() const;
  // One-sided second-order derivative at 0 times 1/2: the loss rate.
  double boundary_flux() const;
  double cdf(double x) const;
  Measure1D to_measure() const;
  // Largest deficiency of cdf(alpha*x) against x before their first
  // crossing: how much boundary-ward mass transport separates the law from
  // a macroscopic minimal jump. +inf when no crossing exists (the law is
  // nowhere supercritical), 0 when it is supercritical from the boundary.
  double criticality_margin(double alpha) const;
};

struct PdeOptions {
  double dt = 5e-5;
  double x_max = 0.0;       // 0: from the initial law's support and horizon
  std::size_t nx = 0;       // 0: from h_target
  double h_target = 5e-4;
  double margin_tol = 5e-3;  // criticality margin that arms fold resolution
  double initial_loss = 0.0;
  std::size_t snapshots = 160;  // heatmap rows; 0 disables collection
  std::size_t inner_iters = 5;  // flux self-consistency loop per step
  double inner_tol = 1e-11;
  std::size_t startup_steps = 2;  // end-reading flux reports after t=0, jumps
  std::size_t max_jumps = 32;
  bool detect_jumps = true;
};

struct PdeResult {
  LossPath path;
  std::vector<CascadeReport> reports;
  std::vector<double> xs;          // heatmap column coordinates
  std::vector<double> snap_times;  // heatmap row times
  std::vector<std::vector<double>> heat;
  double flux_integral = 0.0;       // time integral of the stencil flux
  double max_conservation_gap = 0;  // worst |mass + loss| drift from start
  double max_unit_gap = 0.0;        // worst |mass + loss - 1|
  double max_density_seen = 0.0;
  double initial_max_density = 0.0;
  double final_mass = 0.0;
  double clip_total = 0.0;
  bool reached_horizon = true;
};

// One semi-implicit step at time t: explicit upwind advection at velocity
// alpha * flux - b(t), CFL-substepped, then a backward Euler diffusion
// solve (tridiagonal), with the advection velocity iterated to
// self-consistency. The diffusion stays fully implicit on every step:
// trapezoidal weighting is betrayed by the transport, which re-kinks the
// wall data each step, and at a*dt/h^2 >> 1 those modes come back with
// amplification near -1, burying the boundary stencil in a sawtooth while
// the realized mass flux stays plausible. Loss advances by the exact mass
// the step removed. Returns the stencil flux attributed to the step: the
// average of the start and end readings, except when startup is set, where
// the start profile may be unresolved and only the end reading counts.
double pde_step(DensityGrid& g, const ModelParams& params, double t,
                double dt, bool startup, std::size_t inner_iters = 5,
                double inner_tol = 1e-11);

// Minimal-jump trigger at grid resolution. Two ways to fire: the tabulated
// law is supercritical from the boundary (first-cell density reaches
// 1/alpha and physical_jump clears the grid spacing), or the criticality
// margin has shrunk below margin_tol and the seeded escalation confirms a
// macroscopic jump (a fold reached through regular evolution keeps the
// boundary density under 1/alpha on any finite grid). On a trigger the loss
// jumps, the grid shifts left by alpha times the jump, and a report is
// returned. Sub-grid jumps are ignored.
std::optional<CascadeReport> detect_and_jump(DensityGrid& g, double alpha,
                                             double time,
                                             double margin_tol = 5e-3);

// Evolve a caller-supplied grid. No time-zero resolution on the exact
// initial law is performed; the grid is taken as-is.
PdeResult pde_run_on_grid(const ModelParams& params, DensityGrid g,
                          double horizon, const PdeOptions& opt = {});

// Full route: tabulate params.initial (resolving time-zero fragility on the
// exact measure first, where node tabulation cannot be trusted), then evolve.
PdeResult pde_run(const ModelParams& params, double horizon,
                  const PdeOptions& opt = {});

}  // namespace mvblow
