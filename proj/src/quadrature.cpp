#include "mvblow/quadrature.hpp"

#include <cmath>

namespace mvblow {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSharp = 1e-14;  // below this, kernels act as step/delta
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

namespace {

// Truncated normal moments on [0, w] in the shifted variable:
// M[n] = integral_0^w u^n N(u; m, s^2) du, n = 0..4.
void trunc_moments(double w, double m, double s, double M[5]) {
  double al = -m / s, be = (w - m) / s;
  double Fa = normal_cdf(al), Fb = normal_cdf(be);
  double fa = normal_pdf(al), fb = normal_pdf(be);
  M[0] = Fb - Fa;
  M[1] = m * M[0] - s * (fb - fa);
  double wp = 1.0;  // w^(n-1)
  for (int n = 2; n <= 4; ++n) {
    wp *= w;
    M[n] = m * M[n - 1] + s * s * (n - 1) * M[n - 2] - s * wp * fb;
  }
}

double poly_eval(const double* q, int deg, double u) {
  double v = 0.0;
  for (int k = deg; k >= 0; --k) v = v * u + q[k];
  return v;
}

}  // namespace

double piece_phi_integral(const Piece& p, double c, double s) {
  double w = p.width();
  double m = c - p.a;  // kernel center in shifted coordinates
  // Q(u) = integral_0^u density(a+v) dv; Q[j] multiplies u^j.
  double Q[5] = {0, 0, 0, 0, 0};
  int deg = static_cast<int>(p.coeffs.size());
  for (int k = 0; k < deg; ++k) Q[k + 1] = p.coeffs[k] / (k + 1);
  if (s < kSharp) {
    double u = std::min(w, std::max(0.0, m));
    return poly_eval(Q, 4, u);
  }
  double M[5];
  trunc_moments(w, m, s, M);
  double r = poly_eval(Q, 4, w) * normal_cdf((c - p.b) / s);
  for (int j = 1; j <= 4; ++j) r += Q[j] * M[j];
  return r;
}

double piece_gauss_integral(const Piece& p, double m, double s) {
  if (s < kSharp)
    return (m > p.a && m <= p.b) ? p.density_at(m) : 0.0;
  double M[5];
  trunc_moments(p.width(), m - p.a, s, M);
  double r = 0.0;
  for (std::size_t k = 0; k < p.coeffs.size(); ++k) r += p.coeffs[k] * M[k];
  return r;
}

double measure_phi_integral(const Measure1D& mu, double c, double s) {
  double r = 0.0;
  for (const Piece& p : mu.pieces()) r += piece_phi_integral(p, c, s);
  if (s < kSharp) {
    for (const Atom& a : mu.atoms())
      if (a.x < c) r += a.m;
    return r;
  }
  for (const Atom& a : mu.atoms()) r += a.m * normal_cdf((c - a.x) / s);
  return r;
}

double measure_gauss_integral(const Measure1D& mu, double m, double s) {
  double r = 0.0;
  for (const Piece& p : mu.pieces()) r += piece_gauss_integral(p, m, s);
  if (s >= kSharp)
    for (const Atom& a : mu.atoms()) r += a.m * normal_pdf((a.x - m) / s) / s;
  return r;
}

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double flo, double fhi, double xtol) {
  double x = lo, fx = flo;
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    double mid;
    if (std::abs(fhi - flo) > 1e-300) {
      mid = lo - flo * (hi - lo) / (fhi - flo);  // secant through bracket
      double margin = 0.01 * (hi - lo);
      if (!(mid > lo + margin && mid < hi - margin)) mid = 0.5 * (lo + hi);
    } else {
      mid = 0.5 * (lo + hi);
    }
    x = mid;
    fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace mvblow
