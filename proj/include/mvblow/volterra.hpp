#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvblow/cascade.hpp"
#include "mvblow/loss_path.hpp"
#include "mvblow/model.hpp"

namespace mvblow {

// Accumulated variance and drift over (s, t]: integrals of sigma^2 and b.
// Constant coefficients evaluate exactly; time-dependent ones go through
// per-cell Simpson prefixes with linear interpolation inside cells.
class CoeffKernels {
 public:
  CoeffKernels(const ModelParams& params, double horizon,
               std::size_t cells = 4096);

  double var(double s, double t) const;
  double drift(double s, double t) const;

 private:
  double prefix_at(const std::vector<double>& p, double t) const;

  bool constant_ = true;
  double sig2_ = 1.0, b_ = 0.0;
  double h_ = 0.0, horizon_ = 0.0;
  std::vector<double> var_prefix_, drift_prefix_;
};

// Node times t_base + span * (k/nodes)^grading, k = 0..nodes. Grading > 1
// concentrates nodes at the left end where the loss derivative blows up.
std::vector<double> graded_grid(double t_base, double t_end, std::size_t nodes,
                                double grading);

struct SolverOptions {
  std::size_t nodes = 800;
  double grid_grading = 2.0;
  double initial_loss = 0.0;  // mass counted as absorbed before t = 0
  double jump_cap_floor = 0.05;
  std::size_t max_jumps = 8;
  double y_tol = 1e-12;
  std::size_t density_cells = 600;  // reconstruction resolution at restarts
  bool check_initial_fragility = true;
};

struct VolterraResult {
  LossPath path;
  std::vector<CascadeReport> reports;
  std::vector<double> residuals;  // one per path node
  bool reached_horizon = true;
};

// Direct solve of the first-passage fixed point: at every node the loss
// value is the root of (initial-law term) - (self-excitation term). A node
// with no admissible root signals a blow-up; the surviving density is then
// reconstructed from the path, the minimal jump resolved, and the solve
// restarted from the shifted law.
VolterraResult volterra_solve(const ModelParams& params, double horizon,
                              const SolverOptions& opt = {});

// First-passage probability of the decoupled process driven by a given
// feedback path: a linear Volterra equation, solved by forward substitution
// on the same graded grid. Input is read through cadlag interpolation.
LossPath gamma_map(const ModelParams& params, const LossPath& input,
                   double horizon, const SolverOptions& opt = {});

// Monte Carlo evaluation of the same map, with the within-step crossing
// correction. Independent of the kernel discretization.
LossPath gamma_map_mc(const ModelParams& params, const LossPath& input,
                      double horizon, std::size_t n, double dt,
                      std::uint64_t seed, int threads = 0);

struct PicardResult {
  LossPath path;
  std::vector<double> deltas;  // sup change per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

// Iterate the first-passage map from the zero path. Increases monotonically
// to the minimal solution while the problem stays regular.
PicardResult picard_solve(const ModelParams& params, double horizon,
                          std::size_t max_iter = 60, double tol = 1e-10,
                          const SolverOptions& opt = {});

// Pointwise defect of a candidate path in the discretized equation, one
// value per node. Meaningful up to the path's first registered jump; later
// nodes get NaN.
std::vector<double> equation_residuals(const ModelParams& params,
                                       const LossPath& path);
double max_equation_residual(const ModelParams& params, const LossPath& path);

// Derivative-class membership: interval slopes at or below
// slack * A * t^{-gamma} for all intervals with midpoint in (0, t0], and no
// registered jumps before t0.
bool in_derivative_class(const LossPath& path, double gamma, double A,
                         double t0, double slack = 1.02);

// Random nondecreasing path with derivative bound A * t^{-gamma}, tabulated
// on a graded grid over [0, t0]. Used to probe the map's contraction.
LossPath random_class_path(double gamma, double A, double t0,
                           std::size_t nodes, std::uint64_t seed);

struct ContractionStudy {
  double t0 = 0.0;          // window given by the derivative-class bound
  double a_out = 0.0;       // fitted output derivative constant
  double gamma_out = 0.0;   // output derivative exponent used
  double worst_ratio = 0.0; // max over pairs of sup|G l1 - G l2| / sup|l1 - l2|
  std::size_t pairs = 0;
};

// Measures the Lipschitz ratio of the first-passage map over random pairs
// from the derivative class. The window t0 comes from the comparison bound
// 2 alpha a_out sqrt(2/pi) B(1/2, 1-gamma_out) t^(1/2-gamma_out) <= 1, with
// a_out fitted on probe outputs (x 1.1), never tuned on the tested pairs.
ContractionStudy contraction_study(const ModelParams& params, double gamma_in,
                                   double a_in, double gamma_out,
                                   std::size_t n_pairs, std::uint64_t seed,
                                   double t0_cap, std::size_t nodes = 400);

}  // namespace mvblow
