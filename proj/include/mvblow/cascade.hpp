#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mvblow/measure.hpp"

namespace mvblow {

// These operations assume an atomless measure; atoms make the iterated
// set function ill-posed at the atom locations and are rejected.

struct FragileResult {
  double value = 0.0;
  std::vector<double> trace;  // f_0, f_1, ... including the final value
  std::size_t iterations = 0;
};

class FragileNonConvergence : public std::runtime_error {
 public:
  FragileNonConvergence(std::string msg, std::vector<double> partial)
      : std::runtime_error(std::move(msg)), partial_trace(std::move(partial)) {}
  std::vector<double> partial_trace;
};

// Iterate f_{n+1} = mu(0, alpha*(eps + f_n)) from f_0 = mu(0, alpha*eps)
// until the increment drops below tol. Nondecreasing in n and in eps.
FragileResult fragile_sequence(const Measure1D& mu, double alpha, double eps,
                               double tol = 1e-12,
                               std::size_t n_max = 4000000);

// inf{x >= 0 : mu(0, alpha*x) < x}: the minimal admissible cascade size.
// Sign scan on a geometric grid plus piece-boundary points, refined by
// bisection; absolute accuracy ~1e-9. tol_strict separates touching from
// crossing.
double physical_jump(const Measure1D& mu, double alpha,
                     double tol_strict = 1e-12, double xtol = 1e-9);

// All solutions of mu(0, alpha*x) = x on [0, x_max], as maximal closed
// intervals plus isolated points (grid resolution limited).
struct SolutionSet {
  std::vector<std::pair<double, double>> intervals;
  std::vector<double> points;
};
SolutionSet jump_solution_set(const Measure1D& mu, double alpha, double x_max,
                              double tol_eq = 1e-9);

struct CascadeReport {
  double time = 0.0;
  double epsilon_used = 0.0;
  std::vector<double> trace;
  double jump_size = 0.0;
  std::size_t iterations = 0;
  Measure1D post_measure;

  // Consistency against the pre-jump measure; throws on violation.
  void validate(const Measure1D& pre, double alpha, double tol = 1e-3) const;
};

// Minimal jump for the current measure: size from physical_jump, diagnostic
// trace from a small-eps fragile run, post measure shifted by alpha*size.
CascadeReport resolve_blowup(const Measure1D& mu, double alpha,
                             double time = 0.0, double eps_trace = 1e-6);

struct EscalationResult {
  double value = 0.0;
  double epsilon = 0.0;  // seed that escalated; 0 when every seed stalled
  std::size_t iterations = 0;
  std::vector<double> trace;
  bool resolved() const { return epsilon > 0.0; }
};

// Jump resolution for a law whose criticality is masked by smoothing. A fold
// reached through regular evolution does not show up as excess mass next to
// the boundary: criticality appears as a near-tangency of mu(0, alpha*x)
// against x, and physical_jump still reads 0. A seeded cascade escalates
// through a genuine tangency but stalls near eps for a subcritical law, so
// a run is accepted only when its limit clears the seed by an order of
// magnitude. Seeds are tried smallest first.
EscalationResult escalated_jump(const Measure1D& mu, double alpha);

}  // namespace mvblow
