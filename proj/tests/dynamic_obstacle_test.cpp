#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "quadplan/dynamic_obstacle.hpp"

using namespace quadplan;

namespace {
constexpr double kG = 9.81;
}

TEST_CASE("constant velocity motion") {
  ObstacleMotion m;
  m.type = MotionType::ConstantVelocity;
  m.p0 = Vec3(1, 2, 3);
  m.velocity = Vec3(-0.5, 0.25, 0.0);
  const ObstacleState s = obstacle_state_at(m, 4.0);
  CHECK((s.position - Vec3(-1.0, 3.0, 3.0)).norm() == doctest::Approx(0.0));
  CHECK((s.velocity - m.velocity).norm() == doctest::Approx(0.0));
}

TEST_CASE("back and forth triangle wave") {
  ObstacleMotion m;
  m.type = MotionType::BackAndForth;
  m.e0 = Vec3(0, 0, 1);
  m.e1 = Vec3(4, 0, 1);
  m.speed = 1.0;

  /* segment length 4, period 8: at t = 6 the obstacle has turned around at
   * t = 4 and walked 2 m back, so it sits 2 m from the start moving backwards */
  ObstacleState s = obstacle_state_at(m, 6.0);
  CHECK(s.position.x() == doctest::Approx(2.0));
  CHECK(s.velocity.x() == doctest::Approx(-1.0));

  s = obstacle_state_at(m, 0.0);
  CHECK(s.position.x() == doctest::Approx(0.0));
  CHECK(s.velocity.x() == doctest::Approx(1.0));

  /* endpoint touch at exactly one segment time */
  s = obstacle_state_at(m, 4.0);
  CHECK(s.position.x() == doctest::Approx(4.0));

  /* periodicity */
  for (double t : {0.3, 1.7, 5.5, 7.9}) {
    const ObstacleState a = obstacle_state_at(m, t);
    const ObstacleState b = obstacle_state_at(m, t + 8.0);
    CHECK((a.position - b.position).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((a.velocity - b.velocity).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }

  /* degenerate segment stays put */
  m.e1 = m.e0;
  s = obstacle_state_at(m, 3.0);
  CHECK((s.position - m.e0).norm() == doctest::Approx(0.0));
  CHECK(s.velocity.norm() == doctest::Approx(0.0));
}

TEST_CASE("pendulum matches the analytic arc") {
  ObstacleMotion m;
  m.type = MotionType::Pendulum;
  m.pivot = Vec3(1, 1, 3);
  m.length = 2.0;
  m.amplitude = 0.5;
  m.phase = 0.3;
  m.swing_axis = Vec3(0, 1, 0);

  const double omega = std::sqrt(kG / m.length);
  for (double t : {0.0, 0.4, 1.1, 2.9, 7.3}) {
    const double a = m.amplitude * std::sin(omega * t + m.phase);
    const double adot = m.amplitude * omega * std::cos(omega * t + m.phase);
    const double th = a / m.length;
    const Vec3 want_p = m.pivot + m.length * std::sin(th) * Vec3::UnitY() -
                        m.length * std::cos(th) * Vec3::UnitZ();
    const Vec3 want_v = adot * (std::cos(th) * Vec3::UnitY() + std::sin(th) * Vec3::UnitZ());
    const ObstacleState s = obstacle_state_at(m, t);
    CHECK((s.position - want_p).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((s.velocity - want_v).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }

  /* velocity is the time derivative of position */
  const double h = 1e-6;
  for (double t : {0.2, 1.5, 4.0}) {
    const Vec3 fd = (obstacle_state_at(m, t + h).position -
                     obstacle_state_at(m, t - h).position) /
                    (2 * h);
    CHECK((obstacle_state_at(m, t).velocity - fd).norm() < 1e-6);
  }

  /* at rest hanging straight down when amplitude is zero */
  m.amplitude = 0.0;
  const ObstacleState s = obstacle_state_at(m, 1.23);
  CHECK((s.position - (m.pivot - Vec3(0, 0, 2.0))).norm() == doctest::Approx(0.0));
  CHECK(s.velocity.norm() == doctest::Approx(0.0));
}

TEST_CASE("constant velocity and back-and-forth velocities are consistent derivatives") {
  ObstacleMotion m;
  m.type = MotionType::BackAndForth;
  m.e0 = Vec3(0, -1, 0);
  m.e1 = Vec3(3, 5, 1);
  m.speed = 1.7;
  const double h = 1e-6;
  for (double t : {0.5, 2.0, 6.3}) {  // away from turn times
    const Vec3 fd = (obstacle_state_at(m, t + h).position -
                     obstacle_state_at(m, t - h).position) /
                    (2 * h);
    CHECK((obstacle_state_at(m, t).velocity - fd).norm() < 1e-6);
  }
}

TEST_CASE("ellipsoid validation rejects bad shapes") {
  EllipsoidShape ok;
  ok.semi_axes = Vec3(0.2, 0.3, 0.5);
  CHECK_NOTHROW(validate(ok));

  EllipsoidShape bad = ok;
  bad.semi_axes = Vec3(0.5, 0.3, 0.2);  // not sorted
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad.semi_axes = Vec3(0.0, 0.3, 0.5);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = ok;
  bad.rotation = 2.0 * Eigen::Matrix3d::Identity();  // det 8, not a rotation
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  bad = ok;
  bad.rotation = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  CHECK_NOTHROW(validate(bad));
}
