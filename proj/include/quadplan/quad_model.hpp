#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <functional>

#include "quadplan/grid_map.hpp"

namespace quadplan {

using Quat = Eigen::Quaterniond;

struct QuadParams {
  double mass = 1.0;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  double thrust_min = 0.5;    // N
  double thrust_max = 24.0;   // N
  double thrust_rate_min = -60.0;  // N/s
  double thrust_rate_max = 60.0;
  Vec3 omega_min = Vec3(-4.0, -4.0, -4.0);  // rad/s, body rates
  Vec3 omega_max = Vec3(4.0, 4.0, 4.0);
  double hover_thrust() const { return mass * gravity.norm(); }
};

struct QuadState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quat q = Quat::Identity();  // body-to-world
};

struct ControlInput {
  double thrust = 0.0;  // collective, N
  Vec3 omega = Vec3::Zero();
};

/* thrust promoted to a state so thrust rate is the input; distance barriers
 * then have uniform relative degree three in the input */
struct AugState {
  QuadState s;
  double thrust = 0.0;
};

struct AugInput {
  double thrust_rate = 0.0;  // N/s
  Vec3 omega = Vec3::Zero();
};

/* R(q) e3 T / m + g + sigma */
Vec3 acceleration(const QuadParams& qp, const Quat& q, double thrust, const Vec3& sigma);

/* explicit Euler, quaternion renormalized afterwards; the local-planner
 * prediction model */
QuadState step_euler(const QuadParams& qp, const QuadState& x, const ControlInput& u,
                     const Vec3& sigma, double dt);

/* Euler on the augmented state; the translational/attitude block sees the
 * pre-step thrust */
AugState step_aug(const QuadParams& qp, const AugState& x, const AugInput& u,
                  const Vec3& sigma, double dt);

/* RK4 with substeps and a time-varying disturbance; the simulation plant,
 * deliberately not the same integrator as the prediction model */
QuadState simulate_plant(const QuadParams& qp, const QuadState& x0, const ControlInput& u,
                         const std::function<Vec3(double)>& sigma, double t0, double dt,
                         int substeps);

}  // namespace quadplan
