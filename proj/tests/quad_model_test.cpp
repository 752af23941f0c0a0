#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "quadplan/quad_model.hpp"

using namespace quadplan;

TEST_CASE("acceleration is thrust along the body z axis plus gravity and disturbance") {
  QuadParams qp;
  qp.mass = 2.0;
  const Vec3 sigma(0.1, -0.2, 0.3);

  Vec3 a = acceleration(qp, Quat::Identity(), 10.0, sigma);
  CHECK((a - (Vec3(0, 0, 5.0) + qp.gravity + sigma)).norm() == doctest::Approx(0.0));

  /* 90 degrees about x: body z maps to world -y */
  const Quat q(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitX()));
  a = acceleration(qp, q, 10.0, Vec3::Zero());
  CHECK((a - (Vec3(0, -5.0, 0) + qp.gravity)).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("euler step algebra and quaternion renormalization") {
  QuadParams qp;
  QuadState x;
  x.p = Vec3(1, 2, 3);
  x.v = Vec3(0.5, -0.5, 1.0);
  x.q = Quat(Eigen::AngleAxisd(0.4, Vec3(1, 1, 0).normalized()));
  ControlInput u{12.0, Vec3(0.3, -0.2, 0.1)};
  const Vec3 sigma(0.0, 0.1, 0.0);
  const double dt = 0.05;

  const QuadState n = step_euler(qp, x, u, sigma, dt);
  CHECK((n.p - (x.p + x.v * dt)).norm() == doctest::Approx(0.0));
  CHECK((n.v - (x.v + acceleration(qp, x.q, u.thrust, sigma) * dt)).norm() ==
        doctest::Approx(0.0));
  CHECK(n.q.norm() == doctest::Approx(1.0).epsilon(1e-14));

  /* omega = 0 leaves the attitude untouched */
  u.omega.setZero();
  const QuadState m = step_euler(qp, x, u, sigma, dt);
  CHECK(m.q.angularDistance(x.q) == doctest::Approx(0.0));
}

TEST_CASE("hover is a fixed point of both integrators") {
  QuadParams qp;
  QuadState x;
  x.p = Vec3(0, 0, 1);
  ControlInput u{qp.hover_thrust(), Vec3::Zero()};
  CHECK(qp.hover_thrust() == doctest::Approx(9.81));

  QuadState a = x;
  for (int i = 0; i < 50; ++i) a = step_euler(qp, a, u, Vec3::Zero(), 0.02);
  CHECK((a.p - x.p).norm() < 1e-12);
  CHECK(a.v.norm() < 1e-12);

  auto no_sigma = [](double) { return Vec3::Zero(); };
  QuadState b = simulate_plant(qp, x, u, no_sigma, 0.0, 1.0, 50);
  CHECK((b.p - x.p).norm() < 1e-12);
  CHECK(b.v.norm() < 1e-12);
}

TEST_CASE("plant matches the ballistic closed form when the attitude is frozen") {
  QuadParams qp;
  QuadState x;
  x.p = Vec3(1, -1, 2);
  x.v = Vec3(0.7, 0.1, -0.3);
  x.q = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY()));
  ControlInput u{8.0, Vec3::Zero()};
  const Vec3 sigma(0.2, 0.0, -0.1);
  const double T = 0.8;

  /* with omega = 0 the acceleration is constant, so v is linear in time and p
   * quadratic; RK4 reproduces both exactly */
  const Vec3 a = acceleration(qp, x.q, u.thrust, sigma);
  const QuadState got =
      simulate_plant(qp, x, u, [&](double) { return sigma; }, 0.0, T, 4);
  CHECK((got.p - (x.p + x.v * T + 0.5 * a * T * T)).norm() < 1e-12);
  CHECK((got.v - (x.v + a * T)).norm() < 1e-12);
  CHECK(got.q.angularDistance(x.q) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("plant converges at fourth order under rotation") {
  QuadParams qp;
  QuadState x;
  x.v = Vec3(0.5, 0, 0);
  ControlInput u{11.0, Vec3(1.5, -0.7, 0.4)};
  auto sig = [](double t) { return Vec3(0.3 * std::sin(3 * t), 0.1 * std::cos(2 * t), 0.0); };
  const double T = 0.4;

  const QuadState ref = simulate_plant(qp, x, u, sig, 0.0, T, 2048);
  const QuadState c1 = simulate_plant(qp, x, u, sig, 0.0, T, 2);
  const QuadState c2 = simulate_plant(qp, x, u, sig, 0.0, T, 4);
  const QuadState c3 = simulate_plant(qp, x, u, sig, 0.0, T, 8);
  const double e1 = (c1.p - ref.p).norm() + (c1.v - ref.v).norm();
  const double e2 = (c2.p - ref.p).norm() + (c2.v - ref.v).norm();
  const double e3 = (c3.p - ref.p).norm() + (c3.v - ref.v).norm();
  CHECK(e1 > 0.0);
  /* halving the step should cut the error by about 2^4 */
  CHECK(e2 < e1 / 12.0);
  CHECK(e3 < e2 / 12.0);
  CHECK(e3 < 1e-5);
  CHECK(ref.q.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("plant sees the time-varying disturbance at substep times") {
  QuadParams qp;
  QuadState x;
  ControlInput u{qp.hover_thrust(), Vec3::Zero()};
  /* sigma = (t, 0, 0): v_x(T) = T^2/2 and p_x(T) = T^3/6, polynomial degree
   * within RK4's exactness */
  auto sig = [](double t) { return Vec3(t, 0, 0); };
  const double T = 0.6;
  const QuadState got = simulate_plant(qp, x, u, sig, 0.0, T, 3);
  CHECK(got.v.x() == doctest::Approx(T * T / 2).epsilon(1e-12));
  CHECK(got.p.x() == doctest::Approx(T * T * T / 6).epsilon(1e-12));

  /* a nonzero start time shifts the argument */
  const QuadState shifted = simulate_plant(qp, x, u, sig, 2.0, T, 3);
  CHECK(shifted.v.x() == doctest::Approx(2.0 * T + T * T / 2).epsilon(1e-12));

  CHECK_THROWS_AS(simulate_plant(qp, x, u, sig, 0.0, T, 0), std::invalid_argument);
}

TEST_CASE("augmented step uses the pre-step thrust and integrates the rate") {
  QuadParams qp;
  AugState x;
  x.s.p = Vec3(0, 0, 1);
  x.s.v = Vec3(0.1, 0.2, 0.3);
  x.s.q = Quat(Eigen::AngleAxisd(0.2, Vec3::UnitX()));
  x.thrust = 10.0;
  AugInput u{40.0, Vec3(0.5, 0.1, -0.3)};
  const double dt = 0.1;

  const AugState n = step_aug(qp, x, u, Vec3::Zero(), dt);
  CHECK(n.thrust == doctest::Approx(14.0));

  /* the translational block must not see the updated thrust */
  const QuadState ref = step_euler(qp, x.s, ControlInput{x.thrust, u.omega}, Vec3::Zero(), dt);
  CHECK((n.s.p - ref.p).norm() == doctest::Approx(0.0));
  CHECK((n.s.v - ref.v).norm() == doctest::Approx(0.0));
  CHECK(n.s.q.angularDistance(ref.q) == doctest::Approx(0.0));
}
