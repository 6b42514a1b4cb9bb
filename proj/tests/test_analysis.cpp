#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "mvblow/analysis.hpp"
#include "mvblow/particle.hpp"
#include "mvblow/volterra.hpp"
#include "oracles.hpp"

using namespace mvblow;

TEST_CASE("blowup threshold is strict in twice the mean") {
  Measure1D d1 = Measure1D::point_mass(1.0);
  CHECK(blowup_threshold(d1, 2.5));
  CHECK_FALSE(blowup_threshold(d1, 2.0));
  Measure1D u02 = Measure1D::uniform_block(0.0, 2.0, 0.5);
  CHECK_FALSE(blowup_threshold(u02, 1.9));
  CHECK(blowup_threshold(u02, 2.0 + 1e-9));
  CHECK_THROWS_AS(blowup_threshold(u02.scaled_to(0.4), 1.0),
                  std::invalid_argument);
}

TEST_CASE("deleted solve starts at the killed mass and rejects fat epsilon") {
  ModelParams p;
  p.alpha = 0.5;
  p.initial = profile_measure(0.5);

  const double eps = 0.01;
  LossPath up = epsilon_deleted_solve(p, eps, 0.05);
  const double killed = p.initial.cdf(eps);
  CHECK(up.values().front() == doctest::Approx(killed).epsilon(1e-12));
  CHECK(up.times().front() == 0.0);

  // Uniform density 5 on (0, 0.1): killed = 5 eps, far above eps/(4 alpha).
  ModelParams q;
  q.alpha = 1.0;
  q.initial = Measure1D::uniform_block(0.0, 0.2, 5.0);
  bool threw = false;
  try {
    epsilon_deleted_solve(q, 0.05, 0.05);
  } catch (const std::invalid_argument& e) {
    threw = true;
    CHECK(std::string(e.what()).find("exceeds") != std::string::npos);
  }
  CHECK(threw);

  CHECK_THROWS_AS(
      epsilon_deleted_solve(
          [] {
            ModelParams a;
            a.alpha = 0.5;
            a.initial = Measure1D::point_mass(1.0);
            return a;
          }(),
          0.01, 0.05),
      std::invalid_argument);
}

TEST_CASE("envelope dominates, collapses along the ladder, and stays ordered") {
  ModelParams p;
  p.alpha = 0.5;
  p.initial = profile_measure(0.5);

  EnvelopeStudy st = envelope_study(p, {0.02, 0.01, 0.005}, 0.3);
  REQUIRE(st.uppers.size() == 3);
  CHECK(st.t1 > 0.01);

  // Strict domination at every probe node, all rungs.
  CHECK(st.min_clearance > 0.0);
  // Gap shrinks down the ladder, and roughly linearly in epsilon: two
  // halvings should at least halve the gap overall.
  CHECK(st.ordered);
  CHECK(st.gaps[1] < st.gaps[0]);
  CHECK(st.gaps[2] < st.gaps[1]);
  CHECK(st.gaps[2] <= 0.5 * st.gaps[0]);

  // Rung-to-rung ordering: smaller epsilon stays below bigger epsilon.
  for (double t : st.lower.times()) {
    if (t > st.t1) break;
    CHECK(st.uppers[2].value_at(t) <= st.uppers[1].value_at(t) + 1e-9);
    CHECK(st.uppers[1].value_at(t) <= st.uppers[0].value_at(t) + 1e-9);
  }
}

TEST_CASE("h1 norm: closed form, jump sentinel, monotone in time") {
  LossPath lin;
  for (int i = 0; i <= 100; ++i) lin.append(0.01 * i, 0.003 * i);
  // L = 0.3 t: H1(0,t) = 0.3 sqrt(t).
  CHECK(h1_norm(lin, 0.49) == doctest::Approx(0.3 * 0.7).epsilon(1e-12));
  CHECK(h1_norm(lin, 1.0) == doctest::Approx(0.3).epsilon(1e-12));

  LossPath j;
  j.append(0.0, 0.0);
  j.append(0.5, 0.1);
  j.append(0.5 + 1e-9, 0.6);
  j.register_jump(2, 0.5);
  j.append(1.0, 0.7);
  CHECK(std::isfinite(h1_norm(j, 0.5)));
  CHECK(std::isinf(h1_norm(j, 0.75)));
  CHECK(std::isinf(h1_norm(j, 1.0)));

  // A time-zero charge is not a derivative on (0, t).
  LossPath c;
  c.append(0.0, 0.2);
  c.register_jump(0, 0.2);
  c.append(1.0, 0.4);
  CHECK(h1_norm(c, 1.0) == doctest::Approx(0.2).epsilon(1e-12));

  ModelParams p;
  p.alpha = 0.5;
  p.initial = profile_measure(0.5);
  VolterraResult r = volterra_solve(p, 0.3);
  double prev = 0.0;
  for (double t = 0.02; t <= 0.3; t += 0.02) {
    const double h = h1_norm(r.path, t);
    CHECK(h >= prev);
    prev = h;
  }
  // Derivative-envelope bound: with L' <= A t^-g on (0, t0],
  // H1(0,t0)^2 <= A^2/(1-2g) t0^{1-2g}.
  const double g = 0.25;
  double a_fit = 0.0;
  const auto& ts = r.path.times();
  const auto& vs = r.path.values();
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double dt = ts[i + 1] - ts[i];
    if (dt <= 0.0) continue;
    const double tm = 0.5 * (ts[i] + ts[i + 1]);
    a_fit = std::max(a_fit, (vs[i + 1] - vs[i]) / dt * std::pow(tm, g));
  }
  const double t0 = 0.3;
  const double bound =
      a_fit * a_fit / (1.0 - 2.0 * g) * std::pow(t0, 1.0 - 2.0 * g);
  const double h2 = h1_norm(r.path, t0) * h1_norm(r.path, t0);
  CHECK(h2 <= bound * 1.01);
  CHECK(h2 > 0.1 * bound);  // the bound is tight up to a modest factor
}

TEST_CASE("minimality: deleted paths pass, a shifted-down candidate fails") {
  ModelParams p;
  p.alpha = 0.5;
  p.initial = profile_measure(0.5);
  VolterraResult ref = volterra_solve(p, 0.2);

  MinimalityReport self = minimality_check(ref.path, ref.path, 1e-12);
  CHECK(self.pass);
  CHECK(self.max_violation == 0.0);

  LossPath up = epsilon_deleted_solve(p, 0.01, 0.2);
  MinimalityReport env = minimality_check(ref.path, up, 1e-9);
  CHECK(env.pass);

  LossPath low;
  for (std::size_t i = 0; i < ref.path.size(); ++i)
    low.append(ref.path.times()[i],
               std::max(0.0, ref.path.values()[i] - 0.02));
  MinimalityReport bad = minimality_check(ref.path, low, 1e-3);
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_violation == doctest::Approx(0.02).epsilon(1e-6));
}

TEST_CASE("minimality against the particle route at statistical tolerance") {
  ModelParams p;
  p.alpha = 0.5;
  p.initial = profile_measure(0.5);
  VolterraResult ref = volterra_solve(p, 0.2);

  // (ref - L^N)+ must vanish within 3 SE; convergence_study reports the
  // worst excess beyond 3 SE across the common time grid.
  std::vector<ConvergenceRow> rows =
      convergence_study(p, {2000}, 2e-4, 0.2, 12, 99173, ref.path);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].one_sided_excess <= 0.0);
}

TEST_CASE("short-time exponent tracks the boundary decay") {
  std::vector<ExponentRow> rows =
      exponent_study({0.25, 0.5, 0.75}, 0.5, 0.1);
  REQUIRE(rows.size() == 3);
  for (const ExponentRow& row : rows) {
    CAPTURE(row.beta);
    CAPTURE(row.slope);
    REQUIRE(row.resolved);
    CHECK(row.points >= 20);
    CHECK(std::abs(row.slope - row.expected) <= 0.1);
  }

  // Feedback off: the exponent is kernel-driven, not interaction-driven.
  std::vector<ExponentRow> ctrl = exponent_study({0.5}, 0.0, 0.1);
  REQUIRE(ctrl.size() == 1);
  REQUIRE(ctrl[0].resolved);
  CHECK(std::abs(ctrl[0].slope - (-0.25)) <= 0.1);
  CHECK(std::abs(ctrl[0].slope - rows[1].slope) <= 0.1);
}

TEST_CASE("threshold law forces a registered jump") {
  // Sampled supercritical pairs: every solve must lose continuity before
  // the loss saturates.
  for (std::uint64_t s : {11u, 12u, 13u}) {
    Measure1D mu = oracles::random_block_measure(s, 0.0, 0.0, 3);
    const double alpha = 2.0 * mu.mean() + 0.5;
    REQUIRE(blowup_threshold(mu, alpha));
    ModelParams p;
    p.alpha = alpha;
    p.initial = mu;
    VolterraResult r = volterra_solve(p, 6.0);
    bool jumped = !r.reports.empty();
    CHECK(jumped);
    if (jumped)
      CHECK(r.path.value_at(r.reports.front().time) <= 1.0 + 1e-9);
  }
}
