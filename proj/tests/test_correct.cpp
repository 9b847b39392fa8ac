#include <cmath>

#include "correct.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace orbitatlas;

namespace {

IntegratorConfig tight() { return IntegratorConfig{}; }

OrbitGuess planar_kepler_guess(double x0) {
  SystemParams p;
  const KeplerSeed seed = kepler_circular_seed(x0, SeedSign::retrograde, p);
  OrbitGuess g;
  g.start = seed.state;
  g.symmetry = SymmetryClass::planar_x_axis;
  g.t_guess = seed.period_estimate / 2;
  return g;
}

}  // namespace

TEST_CASE("planar corrector reproduces the outermost retrograde row") {
  SystemParams p;
  OrbitGuess g = planar_kepler_guess(3.96375030);

  CorrectorOptions opts;
  opts.fixed = FixedParameter::x0;
  const PeriodicOrbit orbit = correct(g, opts, tight(), p);

  CHECK(orbit.start[IX] == 3.96375030);  // held fixed
  CHECK(orbit.start[IVY] == doctest::Approx(-4.46622787).epsilon(1e-7));
  CHECK(orbit.period / 2 == doctest::Approx(2.788167).epsilon(1e-5));
  CHECK(orbit.jacobi == doctest::Approx(-3.73079020).epsilon(1e-7));
  CHECK(orbit.residual_norm < 1e-9);
  CHECK(std::fabs(orbit.jacobi - jacobi_constant(orbit.start, p)) < 1e-12);
  CHECK(orbit.period > 0);

  // A converged orbit is a fixed point of the corrector.
  OrbitGuess again;
  again.start = orbit.start;
  again.symmetry = orbit.symmetry;
  again.t_guess = orbit.section_time();
  const PeriodicOrbit re = correct(again, opts, tight(), p);
  CHECK((re.start - orbit.start).norm() < 1e-10);
  CHECK(re.period == doctest::Approx(orbit.period).epsilon(1e-10));
}

TEST_CASE("residual of a tightly converged orbit is numerically zero") {
  SystemParams p;
  CorrectorOptions opts;
  opts.fixed = FixedParameter::x0;
  opts.tol = 1e-12;
  const PeriodicOrbit orbit =
      correct(planar_kepler_guess(3.96375030), opts, tight(), p);

  OrbitGuess g;
  g.start = orbit.start;
  g.symmetry = orbit.symmetry;
  g.t_guess = orbit.section_time();
  CHECK(residual(g, tight(), p).norm() < 1e-11);
}

TEST_CASE("residual of the raw Kepler guess x0=4 (regression value)") {
  SystemParams p;
  const OrbitGuess g = planar_kepler_guess(4.0);
  const Eigen::Vector2d r = residual(g, tight(), p);
  // Frozen at the first verified run.
  CHECK(r[0] == doctest::Approx(-5.508363917542e-05).epsilon(1e-6));
  CHECK(r[1] == doctest::Approx(6.886294526594e-05).epsilon(1e-6));
}

TEST_CASE("residual responds linearly through the variational entries") {
  SystemParams p;
  const OrbitGuess g = planar_kepler_guess(4.0);
  const Eigen::Vector2d r0 = residual(g, tight(), p);

  const double h = 1e-6;
  OrbitGuess gp = g;
  gp.start[IVY] += h;
  const Eigen::Vector2d r1 = residual(gp, tight(), p);

  const VariationalState vs =
      flow_with_variational(g.start, Mat6::Identity(), g.t_guess, tight(), p);
  const Eigen::Vector2d predicted(vs.V(IY, IVY) * h, vs.V(IVX, IVY) * h);
  const Eigen::Vector2d actual = r1 - r0;
  CHECK((actual - predicted).norm() < 1e-4 * predicted.norm());
}

TEST_CASE("spatial corrector pins the tabulated vz0=0.2 branch member") {
  SystemParams p;
  OrbitGuess g;
  g.start << 1.70156, 0, 0, 0, -2.41995, 0.2;
  g.symmetry = SymmetryClass::simple_rho_x;
  g.t_guess = 6.3;

  CorrectorOptions opts;
  opts.fixed = FixedParameter::vz0;
  const PeriodicOrbit orbit = correct(g, opts, tight(), p);

  CHECK(orbit.start[IVZ] == 0.2);
  CHECK(orbit.jacobi == doctest::Approx(-1.81392539).epsilon(1e-6));
  CHECK(orbit.period / 2 == doctest::Approx(6.307532).epsilon(1e-5));
  CHECK(orbit.residual_norm < 1e-9);

  // Full-period closure in phase space.
  const Vec6 back = flow(orbit.start, orbit.period, tight(), p);
  CHECK((back - orbit.start).norm() < 1e-7);
}

TEST_CASE("doubly symmetric classes agree on a vertical branch orbit") {
  SystemParams p;
  const IntegratorConfig cfg = tight();

  // Doubly symmetric member slightly off the planar 1:2 retrograde orbit:
  // start on the x-axis with a small out-of-plane velocity.
  OrbitGuess g;
  g.start << 1.06075604, 0, 0, 0, -2.1025131, 0.05499999;
  g.symmetry = SymmetryClass::doubly_rho_x_first;
  g.t_guess = 1.574389;

  CorrectorOptions opts;
  opts.fixed = FixedParameter::vz0;
  const PeriodicOrbit o1 = correct(g, opts, cfg, p);
  CHECK(o1.residual_norm < 1e-9);
  CHECK(o1.jacobi == doctest::Approx(-1.12353182).epsilon(1e-6));
  CHECK(o1.period / 4 == doctest::Approx(1.574389).epsilon(1e-5));

  // Quarter-period state sits on the other fixed set: y = vx = vz = 0.
  const Vec6 quarter = flow(o1.start, o1.period / 4, cfg, p);
  CHECK(std::fabs(quarter[IY]) < 1e-8);
  CHECK(std::fabs(quarter[IVX]) < 1e-8);
  CHECK(std::fabs(quarter[IVZ]) < 1e-8);

  // Re-correct the same orbit from the other fixed set.
  OrbitGuess g2;
  g2.start << quarter[IX], 0, quarter[IZ], 0, quarter[IVY], 0;
  g2.symmetry = SymmetryClass::doubly_rho_xz_first;
  g2.t_guess = o1.period / 4;

  CorrectorOptions opts2;
  opts2.fixed = FixedParameter::z0;
  const PeriodicOrbit o2 = correct(g2, opts2, cfg, p);
  CHECK(o2.period == doctest::Approx(o1.period).epsilon(1e-8));
  CHECK(o2.jacobi == doctest::Approx(o1.jacobi).epsilon(1e-10));

  const Vec6 quarter2 = flow(o2.start, o2.period / 4, cfg, p);
  CHECK(std::fabs(quarter2[IY]) < 1e-8);
  CHECK(std::fabs(quarter2[IZ]) < 1e-8);
  CHECK(std::fabs(quarter2[IVX]) < 1e-8);

  // Both runs close up in phase space.
  CHECK((flow(o1.start, o1.period, cfg, p) - o1.start).norm() < 1e-7);
  CHECK((flow(o2.start, o2.period, cfg, p) - o2.start).norm() < 1e-7);
}

TEST_CASE("holding the Jacobi constant recovers the tabulated 1:3 member") {
  SystemParams p;
  OrbitGuess g;
  g.start = testutil::one_three_state();
  g.symmetry = SymmetryClass::planar_x_axis;
  g.t_guess = testutil::kOneThreeHalfPeriod;

  CorrectorOptions opts;
  opts.fixed = FixedParameter::jacobi;
  opts.target_jacobi = -1.91761341;
  const PeriodicOrbit orbit = correct(g, opts, tight(), p);

  CHECK(std::fabs(orbit.jacobi - opts.target_jacobi) < 1e-11);
  CHECK(orbit.start[IX] == doctest::Approx(1.60566275).epsilon(1e-6));
  CHECK(orbit.period / 2 ==
        doctest::Approx(testutil::kOneThreeHalfPeriod).epsilon(1e-5));
  CHECK(orbit.residual_norm < 1e-9);
}

TEST_CASE("predictor: zero step copies, secant extrapolates") {
  PeriodicOrbit prev2;
  prev2.start << 4.0, 0, 0, 0, -4.5, 0;
  prev2.period = 5.6;
  prev2.symmetry = SymmetryClass::planar_x_axis;

  PeriodicOrbit prev;
  prev.start << 3.9, 0, 0, 0, -4.4, 0;
  prev.period = 5.4;
  prev.symmetry = SymmetryClass::planar_x_axis;

  CorrectorOptions opts;
  opts.fixed = FixedParameter::x0;

  const OrbitGuess zero = predict(prev, &prev2, 0.0, opts);
  CHECK((zero.start - prev.start).norm() == 0.0);
  CHECK(zero.t_guess == doctest::Approx(prev.period / 2).epsilon(1e-15));

  const OrbitGuess nil = predict(prev, nullptr, -0.1, opts);
  CHECK(nil.start[IX] == doctest::Approx(3.8).epsilon(1e-14));
  CHECK(nil.start[IVY] == -4.4);  // copied

  const OrbitGuess sec = predict(prev, &prev2, -0.1, opts);
  CHECK(sec.start[IX] == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(sec.start[IVY] == doctest::Approx(-4.3).epsilon(1e-12));
  CHECK(sec.t_guess == doctest::Approx(2.6).epsilon(1e-12));
}

TEST_CASE("corrector input validation and failure paths") {
  SystemParams p;
  const OrbitGuess good = planar_kepler_guess(4.0);

  CorrectorOptions bad_fix;
  bad_fix.fixed = FixedParameter::z0;  // not free on the planar class
  CHECK_THROWS_AS(correct(good, bad_fix, tight(), p), std::invalid_argument);

  OrbitGuess off = good;
  off.start[IY] = 0.1;  // violates the fixed-set constraint
  CorrectorOptions opts;
  CHECK_THROWS_AS(correct(off, opts, tight(), p), std::invalid_argument);
  CHECK_THROWS_AS(residual(off, tight(), p), std::invalid_argument);

  OrbitGuess late = good;
  late.t_guess = -1.0;
  CHECK_THROWS_AS(correct(late, opts, tight(), p), std::invalid_argument);

  CorrectorOptions starved;
  starved.fixed = FixedParameter::x0;
  starved.max_iters = 1;
  CHECK_THROWS_AS(correct(good, starved, tight(), p), CorrectionError);
}
