#include "mvblow/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvblow/parallel.hpp"
#include "mvblow/quadrature.hpp"
#include "mvblow/rng.hpp"

namespace mvblow {

CoeffKernels::CoeffKernels(const ModelParams& params, double horizon,
                           std::size_t cells) {
  horizon_ = horizon;
  constant_ = !params.sigma && !params.drift;
  if (constant_) return;
  if (cells < 2) cells = 2;
  h_ = horizon / static_cast<double>(cells);
  var_prefix_.assign(cells + 1, 0.0);
  drift_prefix_.assign(cells + 1, 0.0);
  auto s2 = [&](double t) {
    double s = params.sigma_at(t);
    return s * s;
  };
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = static_cast<double>(i) * h_;
    const double b = a + h_;
    const double m = 0.5 * (a + b);
    var_prefix_[i + 1] =
        var_prefix_[i] + h_ / 6.0 * (s2(a) + 4.0 * s2(m) + s2(b));
    drift_prefix_[i + 1] =
        drift_prefix_[i] + h_ / 6.0 * (params.drift_at(a) +
                                       4.0 * params.drift_at(m) +
                                       params.drift_at(b));
  }
}

double CoeffKernels::prefix_at(const std::vector<double>& p, double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= horizon_) return p.back();
  const double u = t / h_;
  auto i = static_cast<std::size_t>(u);
  if (i + 1 >= p.size()) return p.back();
  return p[i] + (u - static_cast<double>(i)) * (p[i + 1] - p[i]);
}

double CoeffKernels::var(double s, double t) const {
  if (constant_) return std::max(t - s, 0.0);
  return std::max(prefix_at(var_prefix_, t) - prefix_at(var_prefix_, s), 0.0);
}

double CoeffKernels::drift(double s, double t) const {
  if (constant_) return 0.0;
  return prefix_at(drift_prefix_, t) - prefix_at(drift_prefix_, s);
}

std::vector<double> graded_grid(double t_base, double t_end, std::size_t nodes,
                                double grading) {
  if (nodes < 2 || !(t_end > t_base))
    throw std::invalid_argument("graded_grid: bad arguments");
  std::vector<double> g(nodes + 1);
  const double span = t_end - t_base;
  for (std::size_t k = 0; k <= nodes; ++k)
    g[k] = t_base + span * std::pow(static_cast<double>(k) /
                                        static_cast<double>(nodes),
                                    grading);
  g[nodes] = t_end;
  return g;
}

namespace {

// One restarted problem: law nu at time t_base with everything before it
// already counted in L_base. All losses are absolute; the equation only sees
// increments above L_base.
struct Segment {
  const ModelParams* P;
  const CoeffKernels* K;
  const Measure1D* nu;
  double t_base;
  double L_base;
  std::vector<double> t;     // node times, t[0] == t_base
  std::vector<double> L;     // node losses, L[0] == L_base
  std::vector<double> s_mid; // s_mid[j] pairs with interval (t[j-1], t[j]]

  double lhs(double tt, double y) const {
    const double v = K->var(t_base, tt);
    if (v <= 0.0) return 0.0;
    const double c = P->alpha * (y - L_base) - K->drift(t_base, tt);
    return measure_phi_integral(*nu, c, std::sqrt(v));
  }

  double kernel(double sm, double lm, double tt, double y) const {
    const double v = K->var(sm, tt);
    const double num = P->alpha * (y - lm) - K->drift(sm, tt);
    if (v <= 0.0) return num > 0.0 ? 1.0 : (num < 0.0 ? 0.0 : 0.5);
    return normal_cdf(num / std::sqrt(v));
  }

  // Equation defect at node k for trial value y >= L[k-1].
  double defect(std::size_t k, double y) const {
    const double tt = t[k];
    double rhs = 0.0;
    for (std::size_t j = 1; j < k; ++j) {
      const double dl = L[j] - L[j - 1];
      if (dl == 0.0) continue;
      rhs += kernel(s_mid[j], 0.5 * (L[j] + L[j - 1]), tt, y) * dl;
    }
    const double dl = y - L[k - 1];
    if (dl > 0.0) rhs += kernel(s_mid[k], 0.5 * (y + L[k - 1]), tt, y) * dl;
    return lhs(tt, y) - rhs;
  }

  // Surviving density at node-k time from the initial-law kernel minus the
  // absorbed-history kernels, sampled and tabulated as a measure.
  Measure1D reconstruct(std::size_t k, std::size_t cells) const {
    const double tt = t[k];
    const double ell = L[k - 1];
    const double rel = ell - L_base;
    const double v0 = K->var(t_base, tt);
    const double s0 = std::sqrt(v0);
    const double beta0 = K->drift(t_base, tt);
    auto dens = [&](double y) {
      double val =
          measure_gauss_integral(*nu, y + P->alpha * rel - beta0, s0);
      for (std::size_t j = 1; j < k; ++j) {
        const double dl = L[j] - L[j - 1];
        if (dl == 0.0) continue;
        const double v = K->var(s_mid[j], tt);
        if (v <= 0.0) continue;
        const double z = y + P->alpha * (ell - 0.5 * (L[j] + L[j - 1])) -
                         K->drift(s_mid[j], tt);
        val -= dl * normal_pdf(z / std::sqrt(v)) / std::sqrt(v);
      }
      return std::max(val, 0.0);
    };
    const double x_max = nu->support_max() + std::abs(beta0) + 6.0 * s0;
    return Measure1D::from_density(dens, x_max, cells, 2.0);
  }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  return v[m];
}

// The reconstruction smooths at the scale of the elapsed variance, so a
// fold reached by regular evolution reads as near-tangency with
// physical_jump 0; the seeded escalation decides whether it is real.
double dynamic_jump_size(const Measure1D& mu, double alpha) {
  const double pj = physical_jump(mu, alpha);
  if (pj > 1e-8) return pj;
  return escalated_jump(mu, alpha).value;
}

// Subcriticality probe for measures the cascade module cannot handle
// directly (atoms). Fragile initial data with atoms is out of scope.
void reject_fragile_atomic(const Measure1D& mu, double alpha) {
  const double x_hi = std::max(mu.support_max() / std::max(alpha, 1e-12), 1.0);
  for (int i = 1; i <= 512; ++i) {
    const double x = x_hi * static_cast<double>(i) / 512.0;
    if (mu.cdf(alpha * x) >= x)
      throw std::runtime_error(
          "volterra_solve: initial law with atoms is super-solution-critical "
          "at time zero; not supported");
  }
}

void check_volterra_supported(const ModelParams& params) {
  if (params.drift_x)
    throw std::invalid_argument(
        "volterra route requires drift depending on time only");
  if (params.sigma && params.sigma_lo <= 0.0)
    throw std::invalid_argument(
        "volterra route requires strictly positive volatility");
}

}  // namespace

VolterraResult volterra_solve(const ModelParams& params, double horizon,
                              const SolverOptions& opt) {
  params.validate(horizon);
  check_volterra_supported(params);
  if (!(horizon > 0.0)) throw std::invalid_argument("volterra_solve: horizon");

  CoeffKernels kern(params, horizon);
  VolterraResult R;
  Measure1D nu = params.initial;
  double t_base = 0.0;
  double L_base = opt.initial_loss;

  for (std::size_t seg_count = 0;; ++seg_count) {
    // A law that is already past its minimality point loses a macroscopic
    // amount instantly; resolve it before integrating.
    double dl0 = 0.0;
    CascadeReport rep0;
    bool had0 = false;
    if (opt.check_initial_fragility && params.alpha > 0.0 &&
        nu.total_mass() > 1e-12) {
      if (nu.has_atoms()) {
        reject_fragile_atomic(nu, params.alpha);
      } else {
        for (int round = 0; round < 5; ++round) {
          if (physical_jump(nu, params.alpha) <= 1e-9) break;
          CascadeReport rep = resolve_blowup(nu, params.alpha, t_base);
          dl0 += nu.total_mass() - rep.post_measure.total_mass();
          nu = rep.post_measure;
          rep0 = std::move(rep);
          had0 = true;
        }
      }
    }
    if (R.path.empty()) {
      R.path.append(t_base, L_base + dl0);
      R.residuals.push_back(0.0);
      if (dl0 > 0.0) R.path.register_jump(0, dl0);
      if (had0) R.reports.push_back(std::move(rep0));
      L_base += dl0;
    } else if (dl0 > 0.0) {
      throw std::runtime_error(
          "volterra_solve: post-jump law still critical; grid too coarse");
    }

    if (nu.total_mass() < 1e-6) {
      if (t_base < horizon) {
        R.path.append(horizon, L_base);
        R.residuals.push_back(0.0);
      }
      return R;
    }

    Segment seg{&params, &kern, &nu, t_base, L_base, {}, {}, {}};
    seg.t = graded_grid(t_base, horizon, opt.nodes, opt.grid_grading);
    seg.L.assign(1, L_base);
    seg.s_mid.assign(seg.t.size(), 0.0);
    for (std::size_t j = 1; j < seg.t.size(); ++j)
      seg.s_mid[j] = 0.5 * (seg.t[j - 1] + seg.t[j]);

    std::vector<double> recent_inc;
    bool blew_up = false;

    for (std::size_t k = 1; k < seg.t.size(); ++k) {
      const double y0 = seg.L[k - 1];
      const double y_hard = L_base + nu.total_mass();
      const double f0 = seg.defect(k, y0);
      if (f0 <= 0.0) {
        // No upward increment admissible; keep the loss flat and record the
        // (tiny) defect honestly.
        seg.L.push_back(y0);
        R.path.append(seg.t[k], y0);
        R.residuals.push_back(f0);
        recent_inc.push_back(0.0);
        if (recent_inc.size() > 20) recent_inc.erase(recent_inc.begin());
        continue;
      }

      std::vector<double> tail(recent_inc);
      double cap = std::max(opt.jump_cap_floor, 10.0 * median_of(tail));
      const double remaining = std::max(y_hard - y0, 0.0);
      // Top of the admissible range, kept away from full absorption where
      // the equation degenerates to a spurious near-root.
      const double y_top = y_hard - std::max(1e-12, 1e-3 * remaining);
      double root = std::numeric_limits<double>::quiet_NaN();
      bool found = false;

      // Bounded-step scan plus a minimum search: close to a fold the sign
      // dip narrows arbitrarily, so a growing-step scan alone can step over
      // the root.
      auto solve_below = [&](double y_lim) -> bool {
        if (!(y_lim > y0)) return false;
        const double span = y_lim - y0;
        double h = 0.5 * (recent_inc.empty() ? 0.0 : recent_inc.back());
        h = std::clamp(h, span / 4096.0, span / 24.0);
        double yp = y0, fp = f0;
        double fb = f0;  // running minimum
        double y_before = y0, y_after = y_lim;
        while (yp < y_lim) {
          const double yn = std::min(yp + h, y_lim);
          const double fn = seg.defect(k, yn);
          if (fn <= 0.0) {
            root = find_root([&](double y) { return seg.defect(k, y); }, yp,
                             yn, fp, fn, opt.y_tol);
            return true;
          }
          if (fn < fb) {
            y_before = yp;
            fb = fn;
            y_after = std::min(yn + h, y_lim);
          }
          yp = yn;
          fp = fn;
          h = std::min(h * 1.6, span / 24.0);
        }
        // Ternary refinement of the interior minimum.
        double lo = y_before, hi = y_after;
        for (int it = 0; it < 200 && hi - lo > std::max(opt.y_tol, 1e-13);
             ++it) {
          const double m1 = lo + (hi - lo) / 3.0;
          const double m2 = hi - (hi - lo) / 3.0;
          const double f1 = seg.defect(k, m1);
          if (f1 <= 0.0) {
            root = find_root([&](double y) { return seg.defect(k, y); }, lo,
                             m1, seg.defect(k, lo), f1, opt.y_tol);
            return true;
          }
          const double f2 = seg.defect(k, m2);
          if (f2 <= 0.0) {
            root = find_root([&](double y) { return seg.defect(k, y); }, m1,
                             m2, f1, f2, opt.y_tol);
            return true;
          }
          if (f1 < f2)
            hi = m2;
          else
            lo = m1;
        }
        return false;
      };

      found = solve_below(std::min(y0 + cap, y_top));
      bool classified_regular = false;
      for (int widen = 0; widen < 3 && !found; ++widen) {
        if (!classified_regular) {
          // One measure reconstruction decides: a supercritical (or
          // near-tangent) law means the fold is real; a clearly subcritical
          // one means the increment is just larger than the scan cap.
          Measure1D rec = seg.reconstruct(k, opt.density_cells);
          if (dynamic_jump_size(rec, params.alpha) > 0.0) break;
          classified_regular = true;
        }
        cap *= 10.0;
        found = solve_below(std::min(y0 + cap, y_top));
      }

      if (found) {
        seg.L.push_back(root);
        R.path.append(seg.t[k], root);
        R.residuals.push_back(seg.defect(k, root));
        recent_inc.push_back(root - y0);
        if (recent_inc.size() > 20) recent_inc.erase(recent_inc.begin());
        continue;
      }

      // Blow-up at this node: resolve the minimal jump of the reconstructed
      // surviving law and restart from the shifted remainder.
      Measure1D rec = seg.reconstruct(k, opt.density_cells);
      CascadeReport rep;
      if (physical_jump(rec, params.alpha) > 1e-8) {
        rep = resolve_blowup(rec, params.alpha, seg.t[k]);
      } else {
        EscalationResult esc = escalated_jump(rec, params.alpha);
        if (!esc.resolved()) {
          throw std::runtime_error(
              "volterra_solve: no root and no supercritical mass; "
              "discretization breakdown");
        }
        rep.time = seg.t[k];
        rep.epsilon_used = esc.epsilon;
        rep.jump_size = esc.value;
        rep.iterations = esc.iterations;
        rep.trace = std::move(esc.trace);
        rep.post_measure = rec.shift_truncate(params.alpha * esc.value);
      }
      const double dl = rec.total_mass() - rep.post_measure.total_mass();
      const double L_after = seg.L[k - 1] + dl;
      R.path.append(seg.t[k], L_after);
      R.path.register_jump(R.path.size() - 1, dl);
      R.residuals.push_back(std::abs(dl - rep.jump_size));
      nu = rep.post_measure;
      R.reports.push_back(std::move(rep));
      t_base = seg.t[k];
      L_base = L_after;
      blew_up = true;
      break;
    }

    if (!blew_up) return R;  // reached the horizon
    if (t_base >= horizon) return R;
    if (seg_count + 1 >= opt.max_jumps) {
      R.reached_horizon = false;
      return R;
    }
  }
}

LossPath gamma_map(const ModelParams& params, const LossPath& input,
                   double horizon, const SolverOptions& opt) {
  params.validate(horizon);
  check_volterra_supported(params);
  if (input.empty()) throw std::invalid_argument("gamma_map: empty input");

  CoeffKernels kern(params, horizon);
  const std::vector<double> grid =
      graded_grid(0.0, horizon, opt.nodes, opt.grid_grading);
  const double ell0 = input.value_at(0.0);
  auto ell = [&](double t) { return input.value_at(t) - ell0; };

  std::vector<double> dg(grid.size(), 0.0);
  std::vector<double> smid(grid.size(), 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j)
    smid[j] = 0.5 * (grid[j - 1] + grid[j]);

  LossPath out;
  out.append(0.0, opt.initial_loss);
  double g = opt.initial_loss;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t = grid[k];
    const double lt = ell(t);
    const double v0 = kern.var(0.0, t);
    double lhs = 0.0;
    if (v0 > 0.0)
      lhs = measure_phi_integral(params.initial,
                                 params.alpha * lt - kern.drift(0.0, t),
                                 std::sqrt(v0));
    double acc = 0.0;
    double kkk = 0.5;
    for (std::size_t j = 1; j <= k; ++j) {
      const double v = kern.var(smid[j], t);
      const double num =
          params.alpha * (lt - ell(smid[j])) - kern.drift(smid[j], t);
      const double kj =
          v > 0.0 ? normal_cdf(num / std::sqrt(v))
                  : (num > 0.0 ? 1.0 : (num < 0.0 ? 0.0 : 0.5));
      if (j == k)
        kkk = kj;
      else
        acc += kj * dg[j];
    }
    if (kkk < 1e-6) kkk = 1e-6;
    dg[k] = std::max((lhs - acc) / kkk, 0.0);
    g += dg[k];
    out.append(t, g);
  }
  return out;
}

LossPath gamma_map_mc(const ModelParams& params, const LossPath& input,
                      double horizon, std::size_t n, double dt,
                      std::uint64_t seed, int threads) {
  params.validate(horizon);
  if (params.drift_x)
    throw std::invalid_argument("gamma_map_mc: time-dependent drift only");
  if (n == 0 || !(dt > 0.0)) throw std::invalid_argument("gamma_map_mc: args");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  const int nthreads = resolve_threads(threads);

  std::vector<double> x(n);
  std::vector<std::uint8_t> alive(n, 1);
  std::vector<double> zcache(n, 0.0);
  std::vector<CounterRng> rng_z, rng_u;
  rng_z.reserve(n);
  rng_u.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rng_z.emplace_back(seed, 2 * static_cast<std::uint64_t>(i));
    rng_u.emplace_back(seed, 2 * static_cast<std::uint64_t>(i) + 1);
  }
  MeasureSampler sampler(params.initial);
  parallel_for_chunks(n, nthreads,
                      [&](std::size_t, std::size_t lo, std::size_t hi) {
                        for (std::size_t i = lo; i < hi; ++i)
                          x[i] = sampler.invert(rng_u[i].uniform(0));
                      });

  LossPath out;
  out.append(0.0, 0.0);
  std::vector<std::size_t> chunk_defaults(kFixedChunks, 0);
  std::size_t absorbed = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    const double sig = params.sigma_at(t);
    const double vol = sig * std::sqrt(dt);
    const double var_dt = sig * sig * dt;
    const double shift = params.drift_at(t) * dt -
                         params.alpha * (input.value_at(t1) - input.value_at(t));
    std::fill(chunk_defaults.begin(), chunk_defaults.end(), 0);
    parallel_for_chunks(
        n, nthreads, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
          std::size_t d = 0;
          for (std::size_t i = lo; i < hi; ++i) {
            if (!alive[i]) continue;
            double z;
            if ((k & 1u) == 0u) {
              double z1;
              rng_z[i].normal_pair(k >> 1, z, z1);
              zcache[i] = z1;
            } else {
              z = zcache[i];
            }
            const double xo = x[i];
            double xn = xo + shift + vol * z;
            if (xn > 0.0 && var_dt > 0.0) {
              const double e = 2.0 * xo * xn / var_dt;
              if (e < 40.0 && rng_u[i].uniform(k + 1) <= std::exp(-e)) xn = 0.0;
            }
            if (xn <= 0.0) {
              alive[i] = 0;
              ++d;
            } else {
              x[i] = xn;
            }
          }
          chunk_defaults[chunk] = d;
        });
    for (std::size_t c = 0; c < kFixedChunks; ++c)
      absorbed += chunk_defaults[c];
    out.append(t1, static_cast<double>(absorbed) / static_cast<double>(n));
  }
  return out;
}

PicardResult picard_solve(const ModelParams& params, double horizon,
                          std::size_t max_iter, double tol,
                          const SolverOptions& opt) {
  PicardResult R;
  LossPath cur;
  cur.append(0.0, opt.initial_loss);
  cur.append(horizon, opt.initial_loss);
  const double bound =
      params.initial.total_mass() + opt.initial_loss + 0.2;
  for (std::size_t m = 0; m < max_iter; ++m) {
    LossPath nxt = gamma_map(params, cur, horizon, opt);
    const double delta = nxt.sup_distance(cur, nxt.times());
    R.deltas.push_back(delta);
    R.iterations = m + 1;
    cur = std::move(nxt);
    if (cur.values().back() > bound) {
      R.converged = false;
      break;
    }
    if (delta < tol) {
      R.converged = true;
      break;
    }
  }
  R.path = std::move(cur);
  return R;
}

std::vector<double> equation_residuals(const ModelParams& params,
                                       const LossPath& path) {
  check_volterra_supported(params);
  if (path.empty()) return {};
  const std::vector<double>& t = path.times();
  const std::vector<double>& L = path.values();
  CoeffKernels kern(params, t.back());
  const double t_jump = path.first_jump_time();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> res(t.size(), nan);
  res[0] = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (t[k] >= t_jump) break;
    const double v0 = kern.var(t[0], t[k]);
    if (v0 <= 0.0) {
      res[k] = 0.0;
      continue;
    }
    const double lhs = measure_phi_integral(
        params.initial,
        params.alpha * (L[k] - L[0]) - kern.drift(t[0], t[k]), std::sqrt(v0));
    double rhs = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double dl = L[j] - L[j - 1];
      if (dl == 0.0) continue;
      const double sm = 0.5 * (t[j - 1] + t[j]);
      const double v = kern.var(sm, t[k]);
      const double num = params.alpha * (L[k] - 0.5 * (L[j] + L[j - 1])) -
                         kern.drift(sm, t[k]);
      const double kj =
          v > 0.0 ? normal_cdf(num / std::sqrt(v))
                  : (num > 0.0 ? 1.0 : (num < 0.0 ? 0.0 : 0.5));
      rhs += kj * dl;
    }
    res[k] = lhs - rhs;
  }
  return res;
}

double max_equation_residual(const ModelParams& params, const LossPath& path) {
  double worst = 0.0;
  for (double r : equation_residuals(params, path))
    if (std::isfinite(r)) worst = std::max(worst, std::abs(r));
  return worst;
}

bool in_derivative_class(const LossPath& path, double gamma, double A,
                         double t0, double slack) {
  if (path.first_jump_time() <= t0) return false;
  const std::vector<double>& t = path.times();
  const std::vector<double>& v = path.values();
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double tm = 0.5 * (t[k - 1] + t[k]);
    if (tm > t0) break;
    const double dt = t[k] - t[k - 1];
    if (dt <= 0.0) continue;
    const double slope = (v[k] - v[k - 1]) / dt;
    if (slope > slack * A * std::pow(tm, -gamma)) return false;
  }
  return true;
}

namespace {

LossPath class_path(double gamma, double A, double t0, std::size_t nodes,
                    const std::function<double(double)>& w) {
  const std::vector<double> grid = graded_grid(0.0, t0, nodes, 2.0);
  LossPath out;
  out.append(0.0, 0.0);
  double v = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double tm = 0.5 * (grid[k - 1] + grid[k]);
    const double frac = std::clamp(w(tm), 0.0, 1.0);
    v += A * std::pow(tm, -gamma) * frac * (grid[k] - grid[k - 1]);
    out.append(grid[k], v);
  }
  return out;
}

}  // namespace

LossPath random_class_path(double gamma, double A, double t0,
                           std::size_t nodes, std::uint64_t seed) {
  CounterRng rng(seed, 0xc1a55u);
  struct Wave {
    double a, om, ph;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i)
    waves.push_back({0.4 * rng.uniform(3 * i),
                     (2.0 + 38.0 * rng.uniform(3 * i + 1)) / t0,
                     6.2831853071795864769 * rng.uniform(3 * i + 2)});
  return class_path(gamma, A, t0, nodes, [waves](double s) {
    double v = 0.5;
    for (const Wave& w : waves) v += w.a * std::sin(w.om * s + w.ph);
    return v;
  });
}

ContractionStudy contraction_study(const ModelParams& params, double gamma_in,
                                   double a_in, double gamma_out,
                                   std::size_t n_pairs, std::uint64_t seed,
                                   double t0_cap, std::size_t nodes) {
  if (!(gamma_out >= 0.0 && gamma_out < 0.5))
    throw std::invalid_argument("contraction_study: need gamma_out in [0, 1/2)");
  ContractionStudy st;
  st.gamma_out = gamma_out;
  SolverOptions opt;
  opt.nodes = nodes;

  // Output derivative constant, fitted on probe inputs spanning the class
  // (slowest, middle, fastest admissible paths).
  double a_hat = 1e-6;
  for (double frac : {0.0, 0.5, 1.0}) {
    LossPath probe = class_path(gamma_in, a_in, t0_cap, nodes,
                                [frac](double) { return frac; });
    LossPath out = gamma_map(params, probe, t0_cap, opt);
    const std::vector<double>& t = out.times();
    const std::vector<double>& v = out.values();
    for (std::size_t k = 1; k < t.size(); ++k) {
      const double dt = t[k] - t[k - 1];
      if (dt <= 0.0) continue;
      const double tm = 0.5 * (t[k - 1] + t[k]);
      a_hat = std::max(a_hat, (v[k] - v[k - 1]) / dt * std::pow(tm, gamma_out));
    }
  }
  st.a_out = 1.1 * a_hat;

  // Window from the comparison bound: factor
  // alpha sqrt(2/pi) a_out B(1/2, 1 - gamma_out) t^(1/2 - gamma_out) <= 1/2.
  const double coef = params.alpha * std::sqrt(2.0 / 3.14159265358979323846) *
                      st.a_out * std::beta(0.5, 1.0 - gamma_out);
  double t0 = t0_cap;
  if (coef > 1e-300)
    t0 = std::min(t0_cap, std::pow(0.5 / coef, 1.0 / (0.5 - gamma_out)));
  st.t0 = t0;

  for (std::size_t i = 0; i < n_pairs; ++i) {
    LossPath l1, l2;
    double din = 0.0;
    for (int attempt = 0; attempt < 6 && din < 1e-9; ++attempt) {
      l1 = random_class_path(gamma_in, a_in, t0, nodes,
                             CounterRng::derive(seed, 2 * i + 17 * attempt));
      l2 = random_class_path(
          gamma_in, a_in, t0, nodes,
          CounterRng::derive(seed, 2 * i + 1 + 17 * attempt));
      din = l1.sup_distance(l2, l1.times());
    }
    if (din < 1e-9) continue;
    LossPath g1 = gamma_map(params, l1, t0, opt);
    LossPath g2 = gamma_map(params, l2, t0, opt);
    const double dout = g1.sup_distance(g2, g1.times());
    st.worst_ratio = std::max(st.worst_ratio, dout / din);
    ++st.pairs;
  }
  return st;
}

}  // namespace mvblow
