#pragma once

#include <Eigen/Dense>

#include "quadplan/grid_map.hpp"

namespace quadplan {

/* Ellipsoidal moving obstacle. Body coordinates of a world point p are
 * rotation^T * (p - center); semi-axes satisfy lx <= ly <= lz. */
struct EllipsoidShape {
  Vec3 semi_axes = Vec3(0.3, 0.3, 0.3);
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

enum class MotionType { ConstantVelocity, BackAndForth, Pendulum };

struct ObstacleMotion {
  MotionType type = MotionType::ConstantVelocity;
  /* constant velocity */
  Vec3 p0 = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  /* back and forth: triangle wave from e0 towards e1 at constant speed,
   * starting at e0, t = 0 */
  Vec3 e0 = Vec3::Zero();
  Vec3 e1 = Vec3::Zero();
  double speed = 1.0;
  /* pendulum: small-angle arc below pivot, arc amplitude in meters along the
   * horizontal axis, angular frequency sqrt(g/length) */
  Vec3 pivot = Vec3::Zero();
  double length = 1.0;
  double amplitude = 0.0;
  double phase = 0.0;
  Vec3 swing_axis = Vec3::UnitX();
};

struct DynamicObstacle {
  EllipsoidShape shape;
  ObstacleMotion motion;
};

struct ObstacleState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

void validate(const EllipsoidShape& shape);
ObstacleState obstacle_state_at(const ObstacleMotion& motion, double t);

}  // namespace quadplan
