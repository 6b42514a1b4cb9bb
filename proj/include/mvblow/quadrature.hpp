#pragma once

#include <functional>

#include "mvblow/measure.hpp"

namespace mvblow {

double normal_cdf(double x);
double normal_pdf(double x);

// integral over (a,b] of density(x) * Phi((c - x)/s) dx, exact for
// polynomial pieces (closed form via truncated normal moments).
double piece_phi_integral(const Piece& p, double c, double s);

// integral over (a,b] of density(x) * N(x; m, s^2) dx.
double piece_gauss_integral(const Piece& p, double m, double s);

// sum over pieces and atoms of Phi((c - x)/s) d mu(x).
double measure_phi_integral(const Measure1D& mu, double c, double s);

// sum over pieces and atoms of N(x; m, s^2) d mu(x).
double measure_gauss_integral(const Measure1D& mu, double m, double s);

// Root of f on [lo, hi] given f(lo), f(hi) with opposite signs; safeguarded
// secant, falls back to bisection. xtol is absolute.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double flo, double fhi, double xtol);

}  // namespace mvblow
