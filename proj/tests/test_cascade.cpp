#include <cmath>

#include "doctest.h"
#include "mvblow/cascade.hpp"
#include "mvblow/measure.hpp"
#include "mvblow/rng.hpp"
#include "oracles.hpp"

using mvblow::CounterRng;
using mvblow::FragileNonConvergence;
using mvblow::FragileResult;
using mvblow::Measure1D;

namespace {

Measure1D two_block_profile(double alpha) {
  return Measure1D::from_blocks({{0.0, alpha, 1.0 / alpha},
                                 {2.0 * alpha, 3.0 * alpha, 2.0 / alpha}});
}

}  // namespace

TEST_CASE("fragile sequence climbs in steps of eps on the critical ramp") {
  double alpha = 0.5;
  Measure1D mu = two_block_profile(alpha);
  FragileResult r = mvblow::fragile_sequence(mu, alpha, 0.1);
  // f_n = (n+1) * eps while below the ramp top, then sticks at 1
  REQUIRE(r.trace.size() >= 10);
  for (std::size_t n = 0; n < 9; ++n)
    CHECK(r.trace[n] == doctest::Approx(0.1 * (n + 1)).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));

  for (double eps : {0.9, 0.5, 0.1, 0.3, 0.05}) {
    FragileResult q = mvblow::fragile_sequence(mu, alpha, eps);
    CHECK(std::abs(q.value - 1.0) <= 1e-9);
  }
}

TEST_CASE("fragile sequence is nondecreasing in n and in eps") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Measure1D mu = oracles::random_block_measure(s);
    CounterRng rng(3, s);
    double alpha = 0.1 + 4.9 * rng.uniform(0);
    double prev_value = -1.0;
    for (double eps : {1e-4, 1e-3, 1e-2, 0.1}) {
      FragileResult r = mvblow::fragile_sequence(mu, alpha, eps);
      for (std::size_t k = 1; k < r.trace.size(); ++k)
        CHECK(r.trace[k] >= r.trace[k - 1] - 1e-15);
      CHECK(r.value >= prev_value - 1e-12);
      prev_value = r.value;
    }
  }
}

TEST_CASE("fragile sequence rejects atoms and reports non-convergence") {
  Measure1D atomic({}, {{1.0, 1.0}});
  CHECK_THROWS_AS(mvblow::fragile_sequence(atomic, 1.0, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(mvblow::physical_jump(atomic, 1.0), std::invalid_argument);

  // exactly-critical uniform profile climbs by eps each round; a small
  // iteration cap must fail and carry the partial trace
  Measure1D crit = Measure1D::uniform_block(0.0, 1.0, 1.0);
  try {
    mvblow::fragile_sequence(crit, 1.0, 1e-3, 1e-12, 50);
    CHECK(false);
  } catch (const FragileNonConvergence& e) {
    CHECK(e.partial_trace.size() == 51);
    CHECK(e.partial_trace.back() == doctest::Approx(51e-3).epsilon(1e-9));
  }
}

TEST_CASE("physical jump of the two-block profile is the ramp top") {
  double alpha = 0.5;
  Measure1D mu = two_block_profile(alpha);
  double pj = mvblow::physical_jump(mu, alpha);
  CHECK(std::abs(pj - 1.0) <= 1e-6);
}

TEST_CASE("physical jump is 0 for strictly subcritical densities") {
  Measure1D mu = Measure1D::uniform_block(0.0, 2.0, 0.5);
  CHECK(mvblow::physical_jump(mu, 1.0) <= 2e-9);  // alpha*d = 0.5 < 1
  // no mass near the origin: inf is attained immediately as well
  Measure1D gap = Measure1D::uniform_block(0.5, 1.0, 2.0);
  CHECK(mvblow::physical_jump(gap, 1.0) <= 2e-9);
}

TEST_CASE("solution set of the two-block profile: [0,1] and the touch at 3") {
  double alpha = 0.5;
  Measure1D mu = two_block_profile(alpha);
  mvblow::SolutionSet ss = mvblow::jump_solution_set(mu, alpha, 4.0);
  REQUIRE(ss.intervals.size() == 1);
  CHECK(std::abs(ss.intervals[0].first - 0.0) <= 1e-6);
  CHECK(std::abs(ss.intervals[0].second - 1.0) <= 1e-6);
  REQUIRE(ss.points.size() == 1);
  CHECK(std::abs(ss.points[0] - 3.0) <= 1e-6);
}

TEST_CASE("solution set catches transversal crossings") {
  // density 2 on (0, 0.75]: g(x) = 2x - x = x > 0 up to cdf saturation;
  // crossing where 1.5 = x
  Measure1D mu = Measure1D::uniform_block(0.0, 0.75, 2.0);
  mvblow::SolutionSet ss = mvblow::jump_solution_set(mu, 1.0, 3.0);
  bool found = false;
  for (double p : ss.points)
    if (std::abs(p - 1.5) <= 1e-6) found = true;
  CHECK(found);
}

TEST_CASE("small-eps fragile limit agrees with the physical jump") {
  int checked = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    CounterRng rng(11, s);
    double alpha = 0.1 + 4.9 * rng.uniform(0);
    Measure1D mu = oracles::random_block_measure(s + 700, alpha, 0.15);
    double pj = mvblow::physical_jump(mu, alpha);
    double f3 = mvblow::fragile_sequence(mu, alpha, 1e-3).value;
    double f4 = mvblow::fragile_sequence(mu, alpha, 1e-4).value;
    double f5 = mvblow::fragile_sequence(mu, alpha, 1e-5).value;
    CHECK(f3 >= f4 - 1e-12);
    CHECK(f4 >= f5 - 1e-12);
    CHECK(f5 >= pj - 1e-9);
    double limit = oracles::richardson(f4, f5, 10.0);
    CHECK(std::abs(limit - pj) <= 1e-6);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("resolve_blowup on the two-block profile") {
  double alpha = 0.5;
  Measure1D mu = two_block_profile(alpha);
  mvblow::CascadeReport rep = mvblow::resolve_blowup(mu, alpha, 0.25);
  CHECK(std::abs(rep.jump_size - 1.0) <= 1e-6);
  CHECK(rep.time == 0.25);
  CHECK(rep.post_measure.total_mass() == doctest::Approx(2.0).epsilon(1e-6));
  // nothing left to lose immediately: the shifted profile is subcritical at 0
  CHECK(mvblow::physical_jump(rep.post_measure, alpha) <= 1e-6);
  rep.validate(mu, alpha);
  // applying the resolution twice is idempotent up to grid tolerance
  mvblow::CascadeReport rep2 =
      mvblow::resolve_blowup(rep.post_measure, alpha, 0.25);
  CHECK(rep2.jump_size <= 1e-6);
}
