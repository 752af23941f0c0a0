#include "quadplan/gpio_observer.hpp"

#include <stdexcept>

namespace quadplan {

GpioGains gains_from_pole(double pole) {
  if (pole <= 0.0) throw std::invalid_argument("gains_from_pole: pole must be positive");
  GpioGains g;
  g.g1.setConstant(3.0 * pole);
  g.g2.setConstant(3.0 * pole * pole);
  g.g3.setConstant(pole * pole * pole);
  return g;
}

GpioState gpio_update(const QuadParams& qp, const GpioState& s, const Quat& q, double thrust,
                      const Vec3& v_meas, const GpioGains& g, double dt) {
  const Vec3 e = v_meas - s.v_hat;
  const Vec3 model_acc = acceleration(qp, q, thrust, Vec3::Zero());
  GpioState n;
  n.v_hat = s.v_hat + dt * (model_acc + s.z1_hat + g.g1.cwiseProduct(e));
  n.z1_hat = s.z1_hat + dt * (s.z2_hat + g.g2.cwiseProduct(e));
  n.z2_hat = s.z2_hat + dt * g.g3.cwiseProduct(e);
  return n;
}

}  // namespace quadplan
