#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mvblow/measure.hpp"
#include "mvblow/quadrature.hpp"
#include "mvblow/rng.hpp"
#include "oracles.hpp"

using mvblow::Atom;
using mvblow::CounterRng;
using mvblow::Measure1D;
using mvblow::MeasureSampler;
using mvblow::Piece;

namespace {

// Two flat blocks: height 1/alpha on (0, alpha), height 2/alpha on
// (2 alpha, 3 alpha). Total mass 3; kept unnormalized on purpose.
Measure1D two_block_profile(double alpha) {
  return Measure1D::from_blocks({{0.0, alpha, 1.0 / alpha},
                                 {2.0 * alpha, 3.0 * alpha, 2.0 / alpha}});
}

}  // namespace

TEST_CASE("uniform block basics") {
  Measure1D u = Measure1D::uniform_block(0.0, 1.0, 1.0);
  CHECK(u.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.cdf(0.25) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(u.cdf(-1.0) == 0.0);
  CHECK(u.cdf(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.mean() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(u.is_probability());
}

TEST_CASE("two-block profile: mass, cdf, mean against quadrature oracle") {
  double alpha = 0.5;
  Measure1D mu = two_block_profile(alpha);
  mu.validate();
  CHECK(mu.total_mass() == doctest::Approx(3.0).epsilon(1e-13));
  CHECK_FALSE(mu.is_probability());
  CHECK(mu.cdf(0.5) == doctest::Approx(1.0).epsilon(1e-13));

  double mean_oracle =
      oracles::integrate_measure(mu, [](double x) { return x; });
  CHECK(mu.mean() == doctest::Approx(mean_oracle).epsilon(1e-10));
  // frozen: alpha/2 + 5*alpha at alpha = 0.5
  CHECK(mu.mean() == doctest::Approx(2.75).epsilon(1e-12));

  double m2_oracle =
      oracles::integrate_measure(mu, [](double x) { return x * x; });
  double m2 = 0.0;
  for (const Piece& p : mu.pieces())
    m2 += oracles::integrate([&](double x) { return p.density_at(x) * x * x; },
                             p.a, p.b);
  CHECK(m2 == doctest::Approx(m2_oracle).epsilon(1e-10));
}

TEST_CASE("cdf is nondecreasing and matches oracle on random measures") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    Measure1D mu = oracles::random_block_measure(s);
    CounterRng rng(77, s);
    double prev_x = 0.0, prev_c = 0.0;
    for (int j = 0; j < 40; ++j) {
      double x = prev_x + 0.15 * rng.uniform(j);
      double c = mu.cdf(x);
      CHECK(c >= prev_c - 1e-15);
      prev_x = x;
      prev_c = c;
    }
    double probe = 0.3 + 2.0 * rng.uniform(900);
    double c_oracle = oracles::integrate_measure(
        mu, [&](double x) { return x <= probe ? 1.0 : 0.0; }, 1e-13);
    // indicator integrand: split at the probe point instead
    c_oracle = 0.0;
    for (const Piece& p : mu.pieces())
      c_oracle += oracles::integrate(
          [&](double x) { return p.density_at(x); }, p.a, std::min(p.b, probe));
    CHECK(mu.cdf(probe) == doctest::Approx(c_oracle).epsilon(1e-9));
  }
}

TEST_CASE("shift_truncate drops exactly the cdf mass") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    Measure1D mu = oracles::random_block_measure(s + 100);
    CounterRng rng(5, s);
    for (int j = 0; j < 4; ++j) {
      double delta = 2.0 * rng.uniform(j);
      Measure1D nu = mu.shift_truncate(delta);
      CHECK(nu.total_mass() ==
            doctest::Approx(mu.total_mass() - mu.cdf(delta)).epsilon(1e-10));
      // shifted cdf identity: nu(0,x] = mu(0,x+delta] - mu(0,delta]
      double x = 1.3 * rng.uniform(100 + j);
      CHECK(nu.cdf(x) ==
            doctest::Approx(mu.cdf(x + delta) - mu.cdf(delta)).epsilon(1e-10));
    }
  }
}

TEST_CASE("shift_truncate re-anchors polynomial pieces correctly") {
  Piece p;
  p.a = 0.5;
  p.b = 2.0;
  p.coeffs = {0.1, 0.3, -0.05, 0.01};  // stays positive on (0.5, 2)
  Measure1D mu({p}, {});
  mu.validate();
  Measure1D nu = mu.shift_truncate(0.9);  // clips into the piece
  for (double x : {0.05, 0.3, 0.7, 1.05}) {
    CHECK(nu.density(x) == doctest::Approx(mu.density(x + 0.9)).epsilon(1e-12));
  }
  CHECK(nu.total_mass() ==
        doctest::Approx(mu.total_mass() - mu.cdf(0.9)).epsilon(1e-12));
}

TEST_CASE("restrict_above removes exactly the near-origin mass") {
  Measure1D mu = two_block_profile(0.5);
  Measure1D nu = mu.restrict_above(0.2);
  CHECK(nu.total_mass() ==
        doctest::Approx(mu.total_mass() - mu.cdf(0.2)).epsilon(1e-12));
  CHECK(nu.cdf(0.2) == 0.0);
  CHECK(nu.density(0.3) == doctest::Approx(mu.density(0.3)).epsilon(1e-12));
}

TEST_CASE("atoms: cdf right-continuity and point mass") {
  Measure1D d1 = Measure1D::point_mass(1.0);
  CHECK(d1.cdf(1.0) == 1.0);
  CHECK(d1.cdf(std::nextafter(1.0, 0.0)) == 0.0);
  CHECK(d1.mean() == 1.0);
  Measure1D mix({{0.0, 1.0, {0.5}}}, {{0.5, 0.5}});
  CHECK(mix.total_mass() == doctest::Approx(1.0));
  CHECK(mix.cdf(0.5) == doctest::Approx(0.75));
  CHECK(mix.cdf(0.49) == doctest::Approx(0.245));
}

TEST_CASE("validate rejects malformed measures") {
  Piece p1{0.0, 1.0, {1.0}};
  Piece p2{0.5, 1.5, {1.0}};
  CHECK_THROWS(Measure1D({p1, p2}, {}).validate());
  Piece neg{0.0, 1.0, {-0.2}};
  CHECK_THROWS(Measure1D({neg}, {}).validate());
  Piece deg{0.0, 1.0, {1.0, 0.0, 0.0, 0.0, 0.0}};
  CHECK_THROWS(Measure1D({deg}, {}).validate());
  CHECK_THROWS(Measure1D({}, {{-1.0, 0.5}}).validate());
}

TEST_CASE("inverse-cdf sampler: KS distance on uniform(0,1)") {
  Measure1D u = Measure1D::uniform_block(0.0, 1.0, 1.0);
  MeasureSampler sampler(u);
  CounterRng rng(2024, 0);
  const std::size_t n = 1000000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = sampler.invert(rng.uniform(i));
  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = u.cdf(xs[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  CHECK(ks <= 0.002);
}

TEST_CASE("sampler inverts the cdf on mixed and normalized measures") {
  Measure1D raw = two_block_profile(0.5);
  Measure1D mu = raw.scaled_to(1.0);
  CHECK(mu.is_probability(1e-12));
  // fraction of samples in the first block is mass(block1)/3 = 1/3
  MeasureSampler sampler(mu);
  CounterRng rng(9, 9);
  std::size_t n = 200000, hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (sampler.invert(rng.uniform(i)) <= 0.5) ++hits;
  CHECK(std::abs(static_cast<double>(hits) / n - 1.0 / 3.0) < 0.004);

  for (std::uint64_t s = 0; s < 8; ++s) {
    Measure1D m = oracles::random_block_measure(s + 500);
    MeasureSampler smp(m);
    CounterRng r2(31, s);
    for (int j = 0; j < 50; ++j) {
      double uq = r2.uniform(j);
      double x = smp.invert(uq);
      CHECK(m.cdf(x) == doctest::Approx(uq * m.total_mass()).epsilon(1e-8));
    }
  }
}

TEST_CASE("from_density tabulates a sublinear profile") {
  double beta = 0.5;
  auto f = [&](double x) { return 1.5 * std::pow(x, beta); };
  Measure1D mu = Measure1D::from_density(f, 1.0, 400);
  mu.validate();
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(2e-4));
  Measure1D p = mu.scaled_to(1.0);
  mvblow::DecayProfile prof{1.5 * 1.001, 1.6, 1.0, beta};
  CHECK(prof.satisfied_by(p, 1e-9, 400));
  mvblow::DecayProfile bad{0.5, 1.6, 1.0, beta};
  CHECK_FALSE(bad.satisfied_by(p, 1e-9, 400));
  // chord interpolation of a concave density stays at or below it
  for (double x : {0.01, 0.1, 0.37, 0.8})
    CHECK(p.density(x) <= f(x) / mu.total_mass() + 1e-12);
}

TEST_CASE("phi and gauss piece integrals agree with adaptive Simpson") {
  CounterRng rng(424242, 0);
  for (int trial = 0; trial < 60; ++trial) {
    Piece p;
    p.a = 3.0 * rng.uniform(10 * trial);
    p.b = p.a + 0.05 + 2.0 * rng.uniform(10 * trial + 1);
    int deg = static_cast<int>(rng.uniform(10 * trial + 2) * 4);
    if (deg > 3) deg = 3;
    for (int k = 0; k <= deg; ++k)
      p.coeffs.push_back(2.0 * rng.uniform(10 * trial + 3 + k) - 1.0);
    double c = -1.0 + 5.0 * rng.uniform(10 * trial + 8);
    double s = std::pow(10.0, -3.0 + 4.0 * rng.uniform(10 * trial + 9));

    double got_phi = mvblow::piece_phi_integral(p, c, s);
    double want_phi = oracles::integrate(
        [&](double x) {
          return p.density_at(x) * oracles::phi_cdf((c - x) / s);
        },
        p.a, p.b, 1e-13);
    CHECK(got_phi == doctest::Approx(want_phi).epsilon(1e-7));

    double got_g = mvblow::piece_gauss_integral(p, c, s);
    // Split at the kernel's effective support so the adaptive rule cannot
    // step over a spike much narrower than the piece.
    auto gauss_f = [&](double x) {
      return p.density_at(x) * oracles::phi_pdf((x - c) / s) / s;
    };
    std::vector<double> cuts = {p.a, c - 8.0 * s, c, c + 8.0 * s, p.b};
    std::sort(cuts.begin(), cuts.end());
    double want_g = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      double lo = std::max(cuts[j], p.a), hi = std::min(cuts[j + 1], p.b);
      if (hi > lo) want_g += oracles::integrate(gauss_f, lo, hi, 1e-13);
    }
    CHECK(got_g == doctest::Approx(want_g).epsilon(1e-6));
  }
}

TEST_CASE("sharp-kernel limits of the piece integrals") {
  Piece p{0.0, 1.0, {1.0}};
  CHECK(mvblow::piece_phi_integral(p, 0.4, 0.0) == doctest::Approx(0.4));
  CHECK(mvblow::piece_phi_integral(p, 2.0, 0.0) == doctest::Approx(1.0));
  CHECK(mvblow::piece_phi_integral(p, -0.5, 0.0) == doctest::Approx(0.0));
  CHECK(mvblow::piece_gauss_integral(p, 0.4, 0.0) == doctest::Approx(1.0));
  CHECK(mvblow::piece_gauss_integral(p, 1.4, 0.0) == doctest::Approx(0.0));
}
