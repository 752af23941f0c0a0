#pragma once

#include <Eigen/Dense>

#include "quadplan/quad_model.hpp"

namespace quadplan {

/* Generalized-proportional-integral observer on the velocity channel. The
 * disturbance acceleration is extended with its derivative into a 3-integrator
 * chain per axis; a triple pole at -p gives G1 = 3p, G2 = 3p^2, G3 = p^3. */
struct GpioGains {
  Vec3 g1 = Vec3::Zero();
  Vec3 g2 = Vec3::Zero();
  Vec3 g3 = Vec3::Zero();
};

GpioGains gains_from_pole(double pole);

struct GpioState {
  Vec3 v_hat = Vec3::Zero();
  Vec3 z1_hat = Vec3::Zero();  // disturbance acceleration estimate
  Vec3 z2_hat = Vec3::Zero();  // its rate
};

/* One explicit Euler step at the controller rate. q and thrust are the
 * currently applied attitude and collective; v_meas the velocity measurement. */
GpioState gpio_update(const QuadParams& qp, const GpioState& s, const Quat& q, double thrust,
                      const Vec3& v_meas, const GpioGains& g, double dt);

/* the estimate fed to the local planner's first prediction step */
inline Vec3 disturbance_estimate(const GpioState& s) { return s.z1_hat; }

}  // namespace quadplan
