#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mvblow {

// Polynomial density piece on (a, b]: density(x) = sum_k coeffs[k] * (x-a)^k.
// Degree is capped at 3 (coeffs.size() <= 4).
struct Piece {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> coeffs;

  double width() const { return b - a; }
  double density_at(double x) const;
  // Mass of (a, min(x,b)].
  double mass_below(double x) const;
  double mass() const { return mass_below(b); }
  double first_moment() const;  // integral of x * density over (a, b]
};

struct Atom {
  double x = 0.0;
  double m = 0.0;
};

// Finite nonnegative measure on (0, infinity) given by polynomial density
// pieces plus point masses. Total mass is usually 1 but sub-probability
// states (restarted problems) and flagged super-unit masses are allowed;
// operations that require a probability measure say so.
class Measure1D {
 public:
  Measure1D() = default;
  Measure1D(std::vector<Piece> pieces, std::vector<Atom> atoms);

  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool has_atoms() const { return !atoms_.empty(); }

  double total_mass() const { return total_; }
  bool is_probability(double tol = 1e-9) const;

  // Measure of (0, x]. Right-continuous, nondecreasing, cdf(0) = 0.
  double cdf(double x) const;
  // Density at x (atoms ignored); 0 outside all pieces.
  double density(double x) const;
  double mean() const;  // first moment, not normalized
  double support_max() const;

  // Shift left by delta >= 0 and drop whatever lands at or below 0.
  Measure1D shift_truncate(double delta) const;
  // Remove all mass on (0, eps]; keeps the rest in place.
  Measure1D restrict_above(double eps) const;
  // Scaled copy with total mass `target`.
  Measure1D scaled_to(double target) const;

  // Structural checks: ordering, degree cap, nonnegative density. Throws
  // std::invalid_argument with a description on failure.
  void validate() const;

  static Measure1D uniform_block(double a, double b, double dens);
  static Measure1D from_blocks(const std::vector<std::vector<double>>& abd);
  static Measure1D point_mass(double x, double m = 1.0);
  // Piecewise-linear tabulation of `f` on (0, x_max] with n cells graded
  // toward 0 (cell edges at x_max * (j/n)^grading).
  static Measure1D from_density(const std::function<double(double)>& f,
                                double x_max, std::size_t n, double grading = 3.0);

 private:
  std::vector<Piece> pieces_;
  std::vector<Atom> atoms_;
  std::vector<double> piece_prefix_;  // mass of pieces before index i
  std::vector<double> atom_prefix_;
  double total_ = 0.0;

  void rebuild();
};

// Inverse-cdf sampler over a fixed measure. Build once, then invert() is
// O(log pieces) per draw.
class MeasureSampler {
 public:
  explicit MeasureSampler(const Measure1D& mu);
  // u in (0, 1] mapped through the scaled inverse cdf; requires mass > 0.
  double invert(double u) const;

 private:
  struct Seg {
    double cum0, cum1;   // cumulative mass spanned by this segment
    bool is_atom;
    double atom_x;
    Piece piece;
  };
  std::vector<Seg> segs_;
  double total_;
};

// Near-origin density envelope: density(x) <= C * x^beta for x <= x_star and
// density(x) <= D beyond, with beta in (0, 1].
struct DecayProfile {
  double C = 0.0;
  double D = 0.0;
  double x_star = 0.0;
  double beta = 0.0;

  bool satisfied_by(const Measure1D& mu, double tol = 1e-9,
                    std::size_t n_check = 256) const;
};

}  // namespace mvblow
