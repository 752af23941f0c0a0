#include "quadplan/dynamic_obstacle.hpp"

#include <cmath>
#include <stdexcept>

namespace quadplan {

namespace {
constexpr double kGravity = 9.81;
}

void validate(const EllipsoidShape& shape) {
  const Vec3& l = shape.semi_axes;
  if (!(l.x() > 0.0 && l.y() > 0.0 && l.z() > 0.0))
    throw std::invalid_argument("ellipsoid semi-axes must be positive");
  if (!(l.x() <= l.y() && l.y() <= l.z()))
    throw std::invalid_argument("ellipsoid semi-axes must satisfy lx <= ly <= lz");
  if (std::abs(shape.rotation.determinant() - 1.0) > 1e-6)
    throw std::invalid_argument("ellipsoid rotation must be a proper rotation");
}

ObstacleState obstacle_state_at(const ObstacleMotion& m, double t) {
  ObstacleState s;
  switch (m.type) {
    case MotionType::ConstantVelocity:
      s.position = m.p0 + m.velocity * t;
      s.velocity = m.velocity;
      break;
    case MotionType::BackAndForth: {
      const Vec3 seg = m.e1 - m.e0;
      const double len = seg.norm();
      if (len < 1e-12 || m.speed <= 0.0) {
        s.position = m.e0;
        break;
      }
      const Vec3 dir = seg / len;
      double ph = std::fmod(m.speed * t, 2.0 * len);
      if (ph < 0.0) ph += 2.0 * len;
      if (ph <= len) {
        s.position = m.e0 + dir * ph;
        s.velocity = m.speed * dir;
      } else {
        s.position = m.e1 - dir * (ph - len);
        s.velocity = -m.speed * dir;
      }
      break;
    }
    case MotionType::Pendulum: {
      if (m.length <= 0.0) throw std::invalid_argument("pendulum length must be positive");
      const double omega = std::sqrt(kGravity / m.length);
      const Vec3 u = m.swing_axis.normalized();
      /* arc-length coordinate a(t) = A sin(w t + phi), angle = a / length */
      const double a = m.amplitude * std::sin(omega * t + m.phase);
      const double adot = m.amplitude * omega * std::cos(omega * t + m.phase);
      const double th = a / m.length;
      s.position = m.pivot + m.length * (std::sin(th) * u) - m.length * std::cos(th) * Vec3::UnitZ();
      s.velocity = adot * (std::cos(th) * u + std::sin(th) * Vec3::UnitZ());
      break;
    }
  }
  return s;
}

}  // namespace quadplan
