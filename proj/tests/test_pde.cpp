#include "mvblow/pde.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mvblow/volterra.hpp"
#include "oracles.hpp"

using namespace mvblow;

namespace {

// Heat kernel absorbed at 0, started from x0: p_t(x-x0) - p_t(x+x0).
double absorbed_kernel(double t, double x0, double x) {
  const double s = std::sqrt(t);
  return (oracles::phi_pdf((x - x0) / s) - oracles::phi_pdf((x + x0) / s)) /
         s;
}

ModelParams benchmark(double alpha) {
  ModelParams p;
  p.alpha = alpha;
  p.initial = profile_measure(0.5);
  return p;
}

}  // namespace

TEST_CASE("grid tabulation round-trips mass and cdf") {
  Measure1D mu = Measure1D::uniform_block(0.5, 1.5, 1.0);
  DensityGrid g = DensityGrid::from_measure(mu, 4.0, 1600);
  CHECK(g.v[0] == 0.0);
  CHECK(std::abs(g.mass() - 1.0) < 1e-6);
  for (double x : {0.4, 0.8, 1.2, 2.0})
    CHECK(std::abs(g.cdf(x) - mu.cdf(x)) < 1e-5);
  Measure1D back = g.to_measure();
  CHECK(std::abs(back.total_mass() - g.mass()) < 1e-6);
  CHECK(std::abs(back.cdf(1.0) - mu.cdf(1.0)) < 1e-4);
}

TEST_CASE("one step conserves mass plus loss exactly") {
  DensityGrid g = DensityGrid::from_function(
      [](double x) { return absorbed_kernel(0.05, 1.0, x); }, 5.0, 1000);
  ModelParams p;
  p.alpha = 0.5;
  p.initial = Measure1D::point_mass(1.0);
  const double before = g.mass() + g.loss;
  const double flux = pde_step(g, p, 0.0, 1e-4, true);
  CHECK(flux >= 0.0);
  CHECK(std::abs(g.mass() + g.loss - before) < 1e-12);
  CHECK(g.loss > 0.0);
}

TEST_CASE("no feedback: absorbed heat kernel evolves to the later kernel") {
  const double t0 = 0.05, x0 = 1.0, horizon = 0.95;
  DensityGrid g = DensityGrid::from_function(
      [&](double x) { return absorbed_kernel(t0, x0, x); }, 7.0, 2800);
  g.loss = 2.0 * oracles::phi_cdf(-x0 / std::sqrt(t0));

  ModelParams p;
  p.alpha = 0.0;
  p.initial = Measure1D::point_mass(x0);
  PdeOptions opt;
  opt.dt = 1e-4;
  PdeResult r = pde_run_on_grid(p, g, horizon, opt);

  REQUIRE(r.reached_horizon);
  CHECK(r.reports.empty());
  // loss follows the closed-form absorbed mass along the whole run
  for (double s : {0.1, 0.3, 0.6, 0.95})
    CHECK(std::abs(r.path.value_at(s) -
                   2.0 * oracles::phi_cdf(-x0 / std::sqrt(t0 + s))) < 1e-3);
  CHECK(std::abs(r.path.values().back() - 2.0 * oracles::phi_cdf(-1.0)) <
        1e-3);

  // density itself matches the later kernel in sup norm
  REQUIRE(!r.heat.empty());
  CHECK(r.snap_times.back() == doctest::Approx(horizon));
  const std::vector<double>& vf = r.heat.back();
  double worst = 0.0;
  for (std::size_t j = 0; j < r.xs.size(); ++j)
    worst = std::max(
        worst, std::abs(vf[j] - absorbed_kernel(t0 + horizon, x0, r.xs[j])));
  CHECK(worst < 1e-4);

  // bookkeeping: scheme-level drift is roundoff; stencil flux integrates to
  // the absorbed mass; density never exceeds its starting maximum
  CHECK(r.max_conservation_gap < 1e-9);
  CHECK(std::abs(r.flux_integral - (r.path.values().back() - g.loss)) < 1e-4);
  CHECK(r.max_density_seen <= r.initial_max_density * (1.0 + 1e-8));
}

TEST_CASE("no feedback, spread law: superposition of passage laws") {
  ModelParams p;
  p.alpha = 0.0;
  p.initial = Measure1D::uniform_block(0.5, 1.5, 1.0);
  PdeOptions opt;
  opt.dt = 1e-4;
  opt.x_max = 4.5;
  PdeResult r = pde_run(p, 0.25, opt);
  for (double t : {0.1, 0.25}) {
    const double want = oracles::integrate(
        [&](double x) { return oracles::fp_bm(x, t); }, 0.5, 1.5, 1e-12);
    CHECK(std::abs(r.path.value_at(t) - want) < 1e-3);
  }
  CHECK(r.max_unit_gap < 1e-5);
  CHECK(r.max_density_seen <= r.initial_max_density * (1.0 + 1e-8));
}

TEST_CASE("law violating minimality at time zero jumps immediately") {
  // Two blocks, density 2/3 on (0,1/2) and 4/3 on (1,3/2); with
  // alpha = 1.575 the boundary block is 5% supercritical and the minimal
  // jump is the plateau crossing at exactly 1/3.
  ModelParams p;
  p.alpha = 1.575;
  p.initial = Measure1D::from_blocks(
      {{0.0, 0.5, 2.0 / 3.0}, {1.0, 1.5, 4.0 / 3.0}});
  PdeOptions opt;
  opt.dt = 1e-4;
  PdeResult r = pde_run(p, 0.02, opt);

  REQUIRE(!r.reports.empty());
  CHECK(r.reports.front().time == 0.0);
  CHECK(std::abs(r.reports.front().jump_size - 1.0 / 3.0) < 5e-3);
  CHECK(r.path.first_jump_time() == 0.0);
  CHECK(std::abs(r.path.value_at(0.0) - 1.0 / 3.0) < 5e-3);
  // minimal resolution: exactly one time-zero report
  std::size_t at_zero = 0;
  for (const CascadeReport& rep : r.reports)
    if (rep.time == 0.0) ++at_zero;
  CHECK(at_zero == 1);
  r.path.validate(0.05, true);
}

TEST_CASE("supercritical benchmark: grid route agrees with the equation route") {
  ModelParams p = benchmark(2.0);
  const double horizon = 0.02;
  VolterraResult veq = volterra_solve(p, horizon);
  REQUIRE(!veq.reports.empty());

  PdeOptions opt;
  opt.dt = 1e-4;
  PdeResult r = pde_run(p, horizon, opt);
  REQUIRE(!r.reports.empty());
  const CascadeReport& a = r.reports.front();
  const CascadeReport& b = veq.reports.front();
  CHECK(std::abs(a.time - b.time) < 4e-3);
  CHECK(std::abs(a.jump_size - b.jump_size) < 0.05);
  CHECK(std::abs(r.path.values().back() - veq.path.values().back()) < 0.05);
  CHECK(r.max_unit_gap < 1e-5);
}

TEST_CASE("subcritical benchmark: grid route tracks the equation route") {
  ModelParams p = benchmark(0.5);
  const double horizon = 0.4;
  VolterraResult veq = volterra_solve(p, horizon);
  CHECK(veq.reports.empty());

  PdeOptions opt;
  opt.dt = 1e-4;
  PdeResult r = pde_run(p, horizon, opt);
  CHECK(r.reports.empty());
  double worst = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double t = horizon * i / 40.0;
    worst = std::max(worst,
                     std::abs(r.path.value_at(t) - veq.path.value_at(t)));
  }
  CHECK(worst < 0.01);
  CHECK(r.max_unit_gap < 1e-5);
  CHECK(r.max_density_seen <= r.initial_max_density * (1.0 + 1e-8));
  CHECK(std::abs(r.flux_integral -
                 (r.path.values().back() - r.path.values().front())) < 1e-4);
}

TEST_CASE("detect_and_jump: full absorption of a boundary block") {
  Measure1D mu = Measure1D::uniform_block(0.0, 0.5, 2.0);
  DensityGrid g = DensityGrid::from_measure(mu, 2.0, 800);
  const double m0 = g.mass();
  auto rep = detect_and_jump(g, 1.0, 0.3);
  REQUIRE(rep.has_value());
  CHECK(std::abs(rep->jump_size - 1.0) < 1e-2);
  CHECK(g.mass() < 1e-3);
  CHECK(std::abs(g.loss - m0) < 1e-3);
  CHECK(rep->time == 0.3);
}

TEST_CASE("detect_and_jump: subcritical grid is untouched") {
  Measure1D mu = Measure1D::uniform_block(0.0, 2.0, 0.5);
  DensityGrid g = DensityGrid::from_measure(mu, 3.0, 600);
  const std::vector<double> before = g.v;
  CHECK(!detect_and_jump(g, 1.0, 0.0).has_value());
  CHECK(g.v == before);
  CHECK(g.loss == 0.0);
}

TEST_CASE("empty density: loss stays frozen") {
  DensityGrid g;
  g.x_max = 1.0;
  g.nx = 16;
  g.h = 1.0 / 16.0;
  g.v.assign(17, 0.0);
  g.loss = 0.3;
  ModelParams p;
  p.alpha = 1.0;
  p.initial = Measure1D::point_mass(1.0);
  PdeResult r = pde_run_on_grid(p, g, 0.1, {});
  CHECK(r.reports.empty());
  CHECK(r.path.values().front() == 0.3);
  CHECK(r.path.values().back() == 0.3);
  CHECK(r.final_mass == 0.0);
}
