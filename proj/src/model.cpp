#include "mvblow/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mvblow {

void ModelParams::validate(double horizon) const {
  if (alpha < 0.0) throw std::invalid_argument("model: alpha < 0");
  if (initial.total_mass() <= 0.0)
    throw std::invalid_argument("model: empty initial law");
  if (initial.total_mass() > 1.0 + 1e-9)
    throw std::invalid_argument("model: initial mass above 1");
  initial.validate();
  if (sigma) {
    if (sigma_lo < 0.0 || sigma_hi < sigma_lo)
      throw std::invalid_argument("model: bad volatility bounds");
    for (int j = 0; j <= 64; ++j) {
      double s = sigma(horizon * j / 64.0);
      if (s < sigma_lo * (1.0 - 1e-9) || s > sigma_hi * (1.0 + 1e-9))
        throw std::invalid_argument("model: sigma outside declared bounds");
    }
  }
  if (has_profile() && !profile.satisfied_by(initial, 1e-6))
    throw std::invalid_argument("model: initial law violates decay profile");
}

Measure1D profile_measure(double C, double D, double x_star, double beta,
                          std::size_t cells) {
  if (!(C > 0.0) || !(D > 0.0) || !(x_star > 0.0) || !(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("profile_measure: bad parameters");
  Measure1D head = Measure1D::from_density(
      [&](double x) { return C * std::pow(x, beta); }, x_star, cells);
  double head_mass = head.total_mass();
  if (head_mass >= 1.0)
    throw std::invalid_argument("profile_measure: head mass at or above 1");
  double tail_w = (1.0 - head_mass) / D;
  std::vector<Piece> ps(head.pieces());
  Piece tail;
  tail.a = x_star;
  tail.b = x_star + tail_w;
  tail.coeffs = {D};
  ps.push_back(tail);
  Measure1D mu(std::move(ps), {});
  return mu;
}

}  // namespace mvblow
