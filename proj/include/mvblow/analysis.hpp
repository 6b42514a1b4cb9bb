#pragma once

#include <cstddef>
#include <vector>

#include "mvblow/loss_path.hpp"
#include "mvblow/measure.hpp"
#include "mvblow/model.hpp"
#include "mvblow/volterra.hpp"

namespace mvblow {

// Strict mass criterion for guaranteed discontinuity: the feedback exceeds
// twice the initial mean, so the loss cannot stay continuous forever.
// Requires a probability measure.
bool blowup_threshold(const Measure1D& nu0, double alpha);

// Deleted problem: kill the initial mass on (0, eps], pre-charge the loss
// with it, and start the survivors shifted toward the barrier by
// alpha * killed + eps/4. The shifted density then vanishes on a
// neighbourhood of 0 and the solve is regular. Validity needs
// killed <= eps / (4 alpha); violations are rejected with both sides of the
// inequality in the message. The returned path starts at the pre-charged
// loss and dominates the unmodified solution while both stay regular.
LossPath epsilon_deleted_solve(const ModelParams& params, double epsilon,
                               double horizon, const SolverOptions& opt = {});

// Discrete Sobolev seminorm sqrt(integral of L'^2 over (0, t)) from interval
// slopes, the partial last interval prorated. +inf once (0, t] contains a
// registered jump; a jump registered at time 0 is an initial charge, not a
// derivative on the open interval, and does not trip the sentinel.
double h1_norm(const LossPath& path, double t);

struct MinimalityReport {
  double max_violation = 0.0;  // max over probes of (ref - candidate)+
  double at_time = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

// How far the candidate dips below the reference. Probes are the union of
// both node sets on the overlapping time range. The reference is expected
// minimal: any positive excess of ref over candidate is a violation.
MinimalityReport minimality_check(const LossPath& ref,
                                  const LossPath& candidate, double tolerance);

struct ExponentRow {
  double beta = 0.0;
  double slope = 0.0;     // fitted d log L' / d log t
  double expected = 0.0;  // -(1 - beta)/2
  double t_lo = 0.0;      // fit window
  double t_hi = 0.0;
  std::size_t points = 0;
  bool resolved = false;  // a decade with >= 20 interval slopes existed
};

// Short-time growth of the loss derivative for the x^beta profile family:
// solve, take interval slopes, and regress log L' on log t over the
// earliest power-of-ten decade holding at least 20 slope midpoints. Rows
// whose window is cut by a jump or holds fewer points come back unresolved
// with the partial fit left in place.
std::vector<ExponentRow> exponent_study(const std::vector<double>& betas,
                                        double alpha, double horizon = 0.1,
                                        const SolverOptions& opt = {});

struct EnvelopeStudy {
  std::vector<double> epsilons;  // decreasing ladder
  LossPath lower;                // unmodified solve
  std::vector<LossPath> uppers;  // deleted solves, aligned with epsilons
  std::vector<double> gaps;      // sup over [0, t1] of upper - lower
  double t1 = 0.0;               // comparison window
  double min_clearance = 0.0;    // min over ladder and probes of upper - lower
  bool ordered = true;           // gaps nonincreasing down the ladder
};

// Trapping envelope: every deleted solution lies above the unmodified one
// and the ladder collapses onto it as eps shrinks. The window t1 is
// min(half the first jump time, the contraction window fitted from the
// lower path's derivative envelope, horizon); the deleted runs share the
// lower run's node layout so gaps are read on a common grid.
EnvelopeStudy envelope_study(const ModelParams& params,
                             std::vector<double> epsilons, double horizon,
                             const SolverOptions& opt = {});

}  // namespace mvblow
