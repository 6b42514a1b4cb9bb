#include "mvblow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace mvblow {

namespace {

struct SlopeSeries {
  std::vector<double> tm;  // interval midpoints
  std::vector<double> s;   // interval slopes, positive entries only
};

// First registered jump strictly after time 0; a time-zero resolution is an
// initial charge, not a break in regularity.
double first_positive_jump(const LossPath& path) {
  double cut = std::numeric_limits<double>::infinity();
  for (const auto& j : path.jumps()) {
    const double tj = path.times()[j.index];
    if (j.size > 0.0 && tj > 0.0) cut = std::min(cut, tj);
  }
  return cut;
}

// Interval slopes up to the first positive-time jump (exclusive); zero or
// negative slopes are dropped since they cannot enter a log fit.
SlopeSeries interval_slopes(const LossPath& path) {
  SlopeSeries out;
  const auto& t = path.times();
  const auto& v = path.values();
  const double cut = first_positive_jump(path);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i + 1] >= cut) break;
    const double dt = t[i + 1] - t[i];
    if (dt <= 0.0) continue;
    const double s = (v[i + 1] - v[i]) / dt;
    if (s <= 0.0) continue;
    out.tm.push_back(0.5 * (t[i] + t[i + 1]));
    out.s.push_back(s);
  }
  return out;
}

struct DecadeFit {
  double slope = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t points = 0;
  bool resolved = false;
};

// Earliest power-of-ten decade [10^m, 10^{m+1}) holding >= 20 midpoints;
// least squares of log s on log t over it.
DecadeFit fit_earliest_decade(const SlopeSeries& ss) {
  DecadeFit fit;
  if (ss.tm.size() < 2) return fit;
  const int m_lo =
      static_cast<int>(std::floor(std::log10(ss.tm.front())));
  const int m_hi = static_cast<int>(std::ceil(std::log10(ss.tm.back())));
  for (int m = m_lo; m < m_hi; ++m) {
    const double d0 = std::pow(10.0, m);
    const double d1 = 10.0 * d0;
    std::size_t n = 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ss.tm.size(); ++i) {
      if (ss.tm[i] < d0 || ss.tm[i] >= d1) continue;
      const double x = std::log(ss.tm[i]);
      const double y = std::log(ss.s[i]);
      ++n;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    if (n < 20) continue;
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) continue;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.t_lo = d0;
    fit.t_hi = d1;
    fit.points = n;
    fit.resolved = true;
    return fit;
  }
  return fit;
}

}  // namespace

bool blowup_threshold(const Measure1D& nu0, double alpha) {
  if (!nu0.is_probability(1e-6))
    throw std::invalid_argument(
        "blowup_threshold: requires a probability measure");
  return alpha > 2.0 * nu0.mean();
}

LossPath epsilon_deleted_solve(const ModelParams& params, double epsilon,
                               double horizon, const SolverOptions& opt) {
  params.validate(horizon);
  if (!(epsilon > 0.0))
    throw std::invalid_argument("epsilon_deleted_solve: epsilon must be > 0");
  if (params.initial.has_atoms())
    throw std::invalid_argument(
        "epsilon_deleted_solve: initial law must have a density");
  const double killed = params.initial.cdf(epsilon);
  if (params.alpha > 0.0 && killed > 0.25 * epsilon / params.alpha) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "epsilon_deleted_solve: deleted mass %.6g exceeds "
                  "eps/(4 alpha) = %.6g; epsilon too large",
                  killed, 0.25 * epsilon / params.alpha);
    throw std::invalid_argument(buf);
  }
  const double shift = params.alpha * killed + 0.25 * epsilon;

  ModelParams q = params;
  q.initial = params.initial.restrict_above(epsilon).shift_truncate(shift);
  // The decay envelope describes the unmodified law; the shifted one is
  // allowed to exceed it near 0 and draws its regularity from the mass gap.
  q.profile = DecayProfile{};
  SolverOptions o = opt;
  o.initial_loss = opt.initial_loss + killed;
  // The deleted density vanishes below eps - shift >= eps/2 > 0, so the
  // time-zero fragility pass is a no-op; keep it on as a guard.
  return volterra_solve(q, horizon, o).path;
}

double h1_norm(const LossPath& path, double t) {
  const auto& ts = path.times();
  const auto& vs = path.values();
  if (ts.empty() || !(t > ts.front())) return 0.0;
  for (const auto& j : path.jumps()) {
    const double tj = ts[j.index];
    if (j.size > 0.0 && tj > 0.0 && tj <= t)
      return std::numeric_limits<double>::infinity();
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i] >= t) break;
    const double dt = ts[i + 1] - ts[i];
    if (dt <= 0.0) continue;
    const double s = (vs[i + 1] - vs[i]) / dt;
    acc += s * s * (std::min(ts[i + 1], t) - ts[i]);
  }
  return std::sqrt(acc);
}

MinimalityReport minimality_check(const LossPath& ref,
                                  const LossPath& candidate,
                                  double tolerance) {
  MinimalityReport rep;
  rep.tolerance = tolerance;
  if (ref.empty() || candidate.empty())
    throw std::invalid_argument("minimality_check: empty path");
  const double lo = std::max(ref.times().front(), candidate.times().front());
  const double hi = std::min(ref.times().back(), candidate.times().back());
  if (!(hi >= lo))
    throw std::invalid_argument("minimality_check: disjoint time ranges");
  std::vector<double> probes;
  for (double t : ref.times())
    if (t >= lo && t <= hi) probes.push_back(t);
  for (double t : candidate.times())
    if (t >= lo && t <= hi) probes.push_back(t);
  std::sort(probes.begin(), probes.end());
  for (double t : probes) {
    const double ex = ref.value_at(t) - candidate.value_at(t);
    if (ex > rep.max_violation) {
      rep.max_violation = ex;
      rep.at_time = t;
    }
  }
  rep.pass = rep.max_violation <= tolerance;
  return rep;
}

std::vector<ExponentRow> exponent_study(const std::vector<double>& betas,
                                        double alpha, double horizon,
                                        const SolverOptions& opt) {
  std::vector<ExponentRow> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("exponent_study: beta must be in (0, 1)");
    ModelParams p;
    p.alpha = alpha;
    p.initial = profile_measure(beta);
    VolterraResult r = volterra_solve(p, horizon, opt);

    ExponentRow row;
    row.beta = beta;
    row.expected = -0.5 * (1.0 - beta);
    const SlopeSeries ss = interval_slopes(r.path);
    const DecadeFit fit = fit_earliest_decade(ss);
    row.slope = fit.slope;
    row.t_lo = fit.t_lo;
    row.t_hi = fit.t_hi;
    row.points = fit.points;
    row.resolved = fit.resolved;
    rows.push_back(row);
  }
  return rows;
}

EnvelopeStudy envelope_study(const ModelParams& params,
                             std::vector<double> epsilons, double horizon,
                             const SolverOptions& opt) {
  params.validate(horizon);
  if (epsilons.empty())
    throw std::invalid_argument("envelope_study: empty epsilon ladder");
  std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());

  EnvelopeStudy st;
  st.epsilons = epsilons;
  VolterraResult lower = volterra_solve(params, horizon, opt);
  st.lower = lower.path;

  // Window: half the first jump, the contraction window from the fitted
  // derivative envelope A t^-gamma (the comparison bound
  // 2 alpha A sqrt(2/pi) B(1/2, 1-gamma) t1^{1/2-gamma} <= 1), or the
  // horizon, whichever is smallest.
  double t1 = horizon;
  const double tj = first_positive_jump(st.lower);
  if (tj < horizon) t1 = std::min(t1, 0.5 * tj);
  const SlopeSeries ss = interval_slopes(st.lower);
  const DecadeFit fit = fit_earliest_decade(ss);
  if (params.alpha > 0.0 && fit.resolved && fit.slope < 0.0 &&
      fit.slope > -0.5) {
    const double gamma = -fit.slope;
    double a_fit = 0.0;
    for (std::size_t i = 0; i < ss.tm.size(); ++i)
      a_fit = std::max(a_fit, ss.s[i] * std::pow(ss.tm[i], gamma));
    const double factor = 2.0 * params.alpha * 1.1 * a_fit *
                          std::sqrt(2.0 / M_PI) *
                          std::beta(0.5, 1.0 - gamma);
    if (factor > 0.0)
      t1 = std::min(t1, std::pow(1.0 / factor, 1.0 / (0.5 - gamma)));
  }
  st.t1 = t1;

  std::vector<double> probes;
  for (double t : st.lower.times())
    if (t <= t1) probes.push_back(t);
  if (probes.empty() || probes.back() < t1) probes.push_back(t1);

  st.min_clearance = std::numeric_limits<double>::infinity();
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double eps : epsilons) {
    LossPath up = epsilon_deleted_solve(params, eps, horizon, opt);
    double gap = 0.0;
    for (double t : probes) {
      const double d = up.value_at(t) - st.lower.value_at(t);
      gap = std::max(gap, d);
      st.min_clearance = std::min(st.min_clearance, d);
    }
    if (gap > prev_gap) st.ordered = false;
    prev_gap = gap;
    st.gaps.push_back(gap);
    st.uppers.push_back(std::move(up));
  }
  return st;
}

}  // namespace mvblow
