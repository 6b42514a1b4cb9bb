#include "mvblow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvblow {

namespace {

constexpr double kWidthFloor = 1e-300;

// Re-anchor polynomial coefficients from powers of (x - a) to (x - a2).
std::vector<double> shift_anchor(const std::vector<double>& c, double h) {
  // p(x) = sum c_k (x-a)^k, set u = (x-a2), x-a = u + h with h = a2 - a.
  std::vector<double> out(c.size(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    double binom = 1.0;
    double hp = 1.0;
    for (std::size_t j = 0; j <= k; ++j) {
      // coefficient of u^(k-j): C(k, j) * h^j
      out[k - j] += c[k] * binom * hp;
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
      hp *= h;
    }
  }
  return out;
}

}  // namespace

double Piece::density_at(double x) const {
  double u = x - a;
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * u + coeffs[k];
  return v;
}

double Piece::mass_below(double x) const {
  double w = std::min(x, b) - a;
  if (w <= 0.0) return 0.0;
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;)
    v = v * w + coeffs[k] / static_cast<double>(k + 1);
  return v * w;
}

double Piece::first_moment() const {
  double w = b - a;
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) {
    s0 = s0 * w + coeffs[k] / static_cast<double>(k + 1);
    s1 = s1 * w + coeffs[k] / static_cast<double>(k + 2);
  }
  // integral (a+u)p(u)du = a * mass + integral u p(u) du
  return a * s0 * w + s1 * w * w;
}

Measure1D::Measure1D(std::vector<Piece> pieces, std::vector<Atom> atoms)
    : pieces_(std::move(pieces)), atoms_(std::move(atoms)) {
  std::sort(pieces_.begin(), pieces_.end(),
            [](const Piece& l, const Piece& r) { return l.a < r.a; });
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& l, const Atom& r) { return l.x < r.x; });
  rebuild();
}

void Measure1D::rebuild() {
  piece_prefix_.assign(pieces_.size() + 1, 0.0);
  for (std::size_t i = 0; i < pieces_.size(); ++i)
    piece_prefix_[i + 1] = piece_prefix_[i] + pieces_[i].mass();
  atom_prefix_.assign(atoms_.size() + 1, 0.0);
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    atom_prefix_[i + 1] = atom_prefix_[i] + atoms_[i].m;
  total_ = piece_prefix_.back() + atom_prefix_.back();
}

bool Measure1D::is_probability(double tol) const {
  return std::abs(total_ - 1.0) <= tol;
}

double Measure1D::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  // last piece with a < x
  std::size_t lo = 0, hi = pieces_.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (pieces_[mid].a < x) lo = mid + 1; else hi = mid;
  }
  double s = piece_prefix_[lo];
  if (lo > 0) {
    const Piece& p = pieces_[lo - 1];
    if (x < p.b) s -= p.mass() - p.mass_below(x);
  }
  std::size_t alo = 0, ahi = atoms_.size();
  while (alo < ahi) {
    std::size_t mid = (alo + ahi) / 2;
    if (atoms_[mid].x <= x) alo = mid + 1; else ahi = mid;
  }
  return s + atom_prefix_[alo];
}

double Measure1D::density(double x) const {
  for (const Piece& p : pieces_)
    if (x > p.a && x <= p.b) return p.density_at(x);
  return 0.0;
}

double Measure1D::mean() const {
  double s = 0.0;
  for (const Piece& p : pieces_) s += p.first_moment();
  for (const Atom& a : atoms_) s += a.x * a.m;
  return s;
}

double Measure1D::support_max() const {
  double m = 0.0;
  if (!pieces_.empty()) m = pieces_.back().b;
  if (!atoms_.empty()) m = std::max(m, atoms_.back().x);
  return m;
}

Measure1D Measure1D::shift_truncate(double delta) const {
  if (delta < 0.0) throw std::invalid_argument("shift_truncate: delta < 0");
  std::vector<Piece> ps;
  for (const Piece& p : pieces_) {
    double a2 = p.a - delta, b2 = p.b - delta;
    if (b2 <= 0.0) continue;
    Piece q;
    q.b = b2;
    if (a2 >= 0.0) {
      q.a = a2;
      q.coeffs = p.coeffs;
    } else {
      q.a = 0.0;
      q.coeffs = shift_anchor(p.coeffs, -a2);
    }
    if (q.width() > kWidthFloor) ps.push_back(std::move(q));
  }
  std::vector<Atom> as;
  for (const Atom& a : atoms_)
    if (a.x - delta > 0.0) as.push_back({a.x - delta, a.m});
  return Measure1D(std::move(ps), std::move(as));
}

Measure1D Measure1D::restrict_above(double eps) const {
  std::vector<Piece> ps;
  for (const Piece& p : pieces_) {
    if (p.b <= eps) continue;
    Piece q;
    q.b = p.b;
    if (p.a >= eps) {
      q = p;
    } else {
      q.a = eps;
      q.coeffs = shift_anchor(p.coeffs, eps - p.a);
    }
    if (q.width() > kWidthFloor) ps.push_back(std::move(q));
  }
  std::vector<Atom> as;
  for (const Atom& a : atoms_)
    if (a.x > eps) as.push_back(a);
  return Measure1D(std::move(ps), std::move(as));
}

Measure1D Measure1D::scaled_to(double target) const {
  if (total_ <= 0.0) throw std::invalid_argument("scaled_to: empty measure");
  double f = target / total_;
  std::vector<Piece> ps = pieces_;
  for (Piece& p : ps)
    for (double& c : p.coeffs) c *= f;
  std::vector<Atom> as = atoms_;
  for (Atom& a : as) a.m *= f;
  return Measure1D(std::move(ps), std::move(as));
}

void Measure1D::validate() const {
  double prev_end = 0.0;
  for (const Piece& p : pieces_) {
    if (!(p.b > p.a)) throw std::invalid_argument("piece with empty interval");
    if (p.a < 0.0) throw std::invalid_argument("piece starts below 0");
    if (p.a < prev_end - 1e-12) throw std::invalid_argument("overlapping pieces");
    if (p.coeffs.empty() || p.coeffs.size() > 4)
      throw std::invalid_argument("piece degree out of range");
    for (int j = 0; j <= 32; ++j) {
      double x = p.a + p.width() * j / 32.0;
      if (j == 0) x = std::nextafter(p.a, p.b);
      if (p.density_at(x) < -1e-9)
        throw std::invalid_argument("negative density in piece");
    }
    prev_end = p.b;
  }
  for (const Atom& a : atoms_) {
    if (!(a.x > 0.0)) throw std::invalid_argument("atom at or below 0");
    if (!(a.m > 0.0)) throw std::invalid_argument("atom with nonpositive mass");
  }
}

Measure1D Measure1D::uniform_block(double a, double b, double dens) {
  Piece p;
  p.a = a;
  p.b = b;
  p.coeffs = {dens};
  return Measure1D({p}, {});
}

Measure1D Measure1D::from_blocks(const std::vector<std::vector<double>>& abd) {
  std::vector<Piece> ps;
  for (const auto& row : abd) {
    if (row.size() != 3) throw std::invalid_argument("block needs {a, b, density}");
    Piece p;
    p.a = row[0];
    p.b = row[1];
    p.coeffs = {row[2]};
    ps.push_back(p);
  }
  return Measure1D(std::move(ps), {});
}

Measure1D Measure1D::point_mass(double x, double m) {
  return Measure1D({}, {{x, m}});
}

Measure1D Measure1D::from_density(const std::function<double(double)>& f,
                                  double x_max, std::size_t n, double grading) {
  if (n < 2) throw std::invalid_argument("from_density: need n >= 2");
  std::vector<Piece> ps;
  ps.reserve(n);
  double x_prev = 0.0;
  double f_prev = 0.0;  // density pinned to 0 at the origin
  for (std::size_t j = 1; j <= n; ++j) {
    double x = x_max * std::pow(static_cast<double>(j) / n, grading);
    double fx = std::max(0.0, f(x));
    Piece p;
    p.a = x_prev;
    p.b = x;
    p.coeffs = {f_prev, (fx - f_prev) / (x - x_prev)};
    ps.push_back(std::move(p));
    x_prev = x;
    f_prev = fx;
  }
  return Measure1D(std::move(ps), {});
}

MeasureSampler::MeasureSampler(const Measure1D& mu) : total_(mu.total_mass()) {
  if (total_ <= 0.0) throw std::invalid_argument("sampler over empty measure");
  // Merge pieces and atoms in increasing x.
  std::size_t ip = 0, ia = 0;
  double cum = 0.0;
  const auto& ps = mu.pieces();
  const auto& as = mu.atoms();
  while (ip < ps.size() || ia < as.size()) {
    bool take_piece = ia >= as.size() ||
                      (ip < ps.size() && ps[ip].a < as[ia].x);
    Seg s;
    s.cum0 = cum;
    if (take_piece) {
      s.is_atom = false;
      s.piece = ps[ip];
      cum += ps[ip].mass();
      ++ip;
    } else {
      s.is_atom = true;
      s.atom_x = as[ia].x;
      cum += as[ia].m;
      ++ia;
    }
    s.cum1 = cum;
    if (s.cum1 > s.cum0) segs_.push_back(std::move(s));
  }
}

double MeasureSampler::invert(double u) const {
  double target = u * total_;
  std::size_t lo = 0, hi = segs_.size();
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (segs_[mid].cum0 < target) lo = mid; else hi = mid;
  }
  const Seg& s = segs_[lo];
  if (s.is_atom) return s.atom_x;
  double want = std::min(target - s.cum0, s.cum1 - s.cum0);
  const Piece& p = s.piece;
  // Solve mass_below(a + w) = want for w; bisection with Newton steps.
  double wlo = 0.0, whi = p.width();
  double w = whi * want / (s.cum1 - s.cum0);
  for (int it = 0; it < 80; ++it) {
    double g = p.mass_below(p.a + w) - want;
    if (g > 0.0) whi = w; else wlo = w;
    double d = p.density_at(p.a + w);
    double step = (d > 1e-300) ? g / d : 0.0;
    double w2 = w - step;
    if (!(w2 > wlo && w2 < whi)) w2 = 0.5 * (wlo + whi);
    if (std::abs(w2 - w) < 1e-16 * p.width()) { w = w2; break; }
    w = w2;
  }
  return p.a + w;
}

bool DecayProfile::satisfied_by(const Measure1D& mu, double tol,
                                std::size_t n_check) const {
  double xmax = mu.support_max();
  for (std::size_t j = 1; j <= n_check; ++j) {
    double x = xmax * static_cast<double>(j) / static_cast<double>(n_check);
    double bound = (x <= x_star) ? C * std::pow(x, beta) : D;
    if (mu.density(x) > bound + tol) return false;
  }
  return true;
}

}  // namespace mvblow
