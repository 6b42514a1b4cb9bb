#include "mvblow/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvblow/quadrature.hpp"

namespace mvblow {

namespace {

void require_atomless(const Measure1D& mu, const char* op) {
  if (mu.has_atoms())
    throw std::invalid_argument(std::string(op) + ": measure has atoms");
}

// Scan abscissas for x -> mu(0, alpha x) - x on (0, x_hi]: geometric ladder,
// piece boundaries mapped through 1/alpha, and a uniform refinement of each
// boundary gap so that dips inside polynomial stretches are seen.
std::vector<double> scan_points(const Measure1D& mu, double alpha,
                                double x_hi) {
  std::vector<double> pts;
  for (double x = 1e-9; x < x_hi; x *= 1.02) pts.push_back(x);
  pts.push_back(x_hi);
  if (alpha > 0.0) {
    std::vector<double> bounds;
    for (const Piece& p : mu.pieces()) {
      bounds.push_back(p.a / alpha);
      bounds.push_back(p.b / alpha);
    }
    std::sort(bounds.begin(), bounds.end());
    double prev = 0.0;
    for (double b : bounds) {
      if (b <= 0.0 || b > x_hi) continue;
      for (int j = 1; j <= 32; ++j)
        pts.push_back(prev + (b - prev) * j / 32.0);
      prev = b;
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

FragileResult fragile_sequence(const Measure1D& mu, double alpha, double eps,
                               double tol, std::size_t n_max) {
  require_atomless(mu, "fragile_sequence");
  if (alpha < 0.0 || eps < 0.0)
    throw std::invalid_argument("fragile_sequence: negative alpha or eps");
  FragileResult r;
  double f = mu.cdf(alpha * eps);
  r.trace.push_back(f);
  for (std::size_t n = 0; n < n_max; ++n) {
    double next = mu.cdf(alpha * (eps + f));
    r.trace.push_back(next);
    ++r.iterations;
    if (next - f < tol) {
      r.value = next;
      return r;
    }
    f = next;
  }
  throw FragileNonConvergence(
      "fragile_sequence: no fixed point after " + std::to_string(n_max) +
          " iterations",
      std::move(r.trace));
}

double physical_jump(const Measure1D& mu, double alpha, double tol_strict,
                     double xtol) {
  require_atomless(mu, "physical_jump");
  double x_hi = mu.total_mass() + 1.0;
  auto g = [&](double x) { return mu.cdf(alpha * x) - x; };
  std::vector<double> pts = scan_points(mu, alpha, x_hi);
  double prev = 0.0;
  for (double x : pts) {
    if (g(x) <= -tol_strict) {
      // first strictly-negative point; locate where g crosses -tol_strict
      double lo = prev, hi = x;
      while (hi - lo > xtol) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) <= -tol_strict) hi = mid; else lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = x;
  }
  return x_hi;  // unreachable for finite measures: g(total+1) <= -1
}

SolutionSet jump_solution_set(const Measure1D& mu, double alpha, double x_max,
                              double tol_eq) {
  require_atomless(mu, "jump_solution_set");
  auto h = [&](double x) { return mu.cdf(alpha * x) - x; };

  std::vector<double> pts = scan_points(mu, alpha, x_max);
  std::vector<double> grid;
  grid.push_back(0.0);
  for (double x : pts)
    if (x <= x_max) grid.push_back(x);
  for (int j = 1; j <= 2048; ++j) grid.push_back(x_max * j / 2048.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> hv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) hv[i] = h(grid[i]);

  auto on = [&](std::size_t i) { return std::abs(hv[i]) <= tol_eq; };

  // boundary of the |h| <= tol_eq region between an on point and an off point
  auto refine_edge = [&](double x_on, double x_off) {
    for (int it = 0; it < 60 && std::abs(x_off - x_on) > 1e-12; ++it) {
      double mid = 0.5 * (x_on + x_off);
      if (std::abs(h(mid)) <= tol_eq) x_on = mid; else x_off = mid;
    }
    return 0.5 * (x_on + x_off);
  };

  SolutionSet out;
  std::size_t i = 0;
  while (i < grid.size()) {
    if (on(i)) {
      std::size_t j = i;
      while (j + 1 < grid.size() && on(j + 1)) ++j;
      double lo = grid[i], hi = grid[j];
      if (i > 0) lo = refine_edge(grid[i], grid[i - 1]);
      if (j + 1 < grid.size()) hi = refine_edge(grid[j], grid[j + 1]);
      if (hi - lo > 1e-6)
        out.intervals.emplace_back(lo, hi);
      else
        out.points.push_back(0.5 * (lo + hi));
      i = j + 1;
      continue;
    }
    if (i + 1 < grid.size() && !on(i + 1) && hv[i] * hv[i + 1] < 0.0) {
      out.points.push_back(find_root(h, grid[i], grid[i + 1], hv[i],
                                     hv[i + 1], 1e-12));
    }
    // tangency from below strictly inside a gap: local max of h near 0
    if (i > 0 && i + 1 < grid.size() && hv[i] > -1e-4 && hv[i] < -tol_eq &&
        hv[i] >= hv[i - 1] && hv[i] >= hv[i + 1]) {
      double a = grid[i - 1], b = grid[i + 1];
      for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (h(m1) < h(m2)) a = m1; else b = m2;
      }
      double xm = 0.5 * (a + b);
      if (std::abs(h(xm)) <= tol_eq) out.points.push_back(xm);
    }
    ++i;
  }

  // drop points swallowed by intervals or duplicated
  std::vector<double> cleaned;
  for (double p : out.points) {
    bool inside = false;
    for (auto& iv : out.intervals)
      if (p >= iv.first - 1e-8 && p <= iv.second + 1e-8) inside = true;
    if (!inside && (cleaned.empty() || p - cleaned.back() > 1e-8))
      cleaned.push_back(p);
  }
  out.points = std::move(cleaned);
  return out;
}

void CascadeReport::validate(const Measure1D& pre, double alpha,
                             double tol) const {
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k] + 1e-12 < trace[k - 1])
      throw std::runtime_error("CascadeReport: trace not nondecreasing");
  if (!trace.empty() && std::abs(trace.back() - jump_size) > tol)
    throw std::runtime_error("CascadeReport: trace end differs from jump size");
  double expect = pre.total_mass() - pre.cdf(alpha * jump_size);
  if (std::abs(post_measure.total_mass() - expect) > 1e-8)
    throw std::runtime_error("CascadeReport: post measure mass mismatch");
}

namespace {

std::vector<double> thin_trace(std::vector<double> tr, std::size_t cap = 2048) {
  if (tr.size() <= cap) return tr;
  std::vector<double> out;
  std::size_t stride = (tr.size() + cap - 1) / cap;
  for (std::size_t i = 0; i < tr.size(); i += stride) out.push_back(tr[i]);
  if (out.back() != tr.back()) out.push_back(tr.back());
  return out;
}

}  // namespace

CascadeReport resolve_blowup(const Measure1D& mu, double alpha, double time,
                             double eps_trace) {
  require_atomless(mu, "resolve_blowup");
  CascadeReport rep;
  rep.time = time;
  rep.jump_size = physical_jump(mu, alpha);
  // On exactly-critical stretches the iteration climbs by ~eps per round;
  // scale eps with the jump so the trace stays a few thousand entries.
  double eps = eps_trace;
  if (rep.jump_size > 0.0) eps = std::max(eps, rep.jump_size * 1e-4);
  rep.epsilon_used = eps;
  try {
    FragileResult fr = fragile_sequence(mu, alpha, eps);
    rep.trace = thin_trace(std::move(fr.trace));
    rep.iterations = fr.iterations;
  } catch (const FragileNonConvergence& e) {
    rep.trace = thin_trace(e.partial_trace);
    rep.iterations = e.partial_trace.size();
  }
  rep.post_measure = mu.shift_truncate(alpha * rep.jump_size);
  return rep;
}

EscalationResult escalated_jump(const Measure1D& mu, double alpha) {
  require_atomless(mu, "escalated_jump");
  for (double eps : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    FragileResult fr;
    try {
      fr = fragile_sequence(mu, alpha, eps);
    } catch (const FragileNonConvergence& e) {
      fr.trace = e.partial_trace;
      fr.value = fr.trace.empty() ? 0.0 : fr.trace.back();
      fr.iterations = fr.trace.size();
    }
    if (fr.value > 10.0 * eps) {
      EscalationResult out;
      out.value = fr.value;
      out.epsilon = eps;
      out.iterations = fr.iterations;
      out.trace = thin_trace(std::move(fr.trace));
      return out;
    }
  }
  return {};
}

}  // namespace mvblow
