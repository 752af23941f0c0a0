#include "quadplan/quad_model.hpp"

#include <stdexcept>

namespace quadplan {

Vec3 acceleration(const QuadParams& qp, const Quat& q, double thrust, const Vec3& sigma) {
  return q * Vec3(0.0, 0.0, thrust / qp.mass) + qp.gravity + sigma;
}

namespace {

/* qdot = 0.5 q (0, omega), omega in body frame */
Quat quat_derivative(const Quat& q, const Vec3& omega) {
  Quat w(0.0, omega.x(), omega.y(), omega.z());
  Quat d = q * w;
  return Quat(0.5 * d.w(), 0.5 * d.x(), 0.5 * d.y(), 0.5 * d.z());
}

Quat quat_add_scaled(const Quat& q, const Quat& d, double dt) {
  return Quat(q.w() + dt * d.w(), q.x() + dt * d.x(), q.y() + dt * d.y(), q.z() + dt * d.z());
}

}  // namespace

QuadState step_euler(const QuadParams& qp, const QuadState& x, const ControlInput& u,
                     const Vec3& sigma, double dt) {
  QuadState n;
  n.p = x.p + x.v * dt;
  n.v = x.v + acceleration(qp, x.q, u.thrust, sigma) * dt;
  n.q = quat_add_scaled(x.q, quat_derivative(x.q, u.omega), dt);
  n.q.normalize();
  return n;
}

AugState step_aug(const QuadParams& qp, const AugState& x, const AugInput& u,
                  const Vec3& sigma, double dt) {
  AugState n;
  n.s = step_euler(qp, x.s, ControlInput{x.thrust, u.omega}, sigma, dt);
  n.thrust = x.thrust + u.thrust_rate * dt;
  return n;
}

QuadState simulate_plant(const QuadParams& qp, const QuadState& x0, const ControlInput& u,
                         const std::function<Vec3(double)>& sigma, double t0, double dt,
                         int substeps) {
  if (substeps < 1) throw std::invalid_argument("simulate_plant: substeps must be >= 1");
  const double h = dt / substeps;
  QuadState x = x0;
  double t = t0;
  struct Deriv {
    Vec3 dp, dv;
    Quat dq;
  };
  auto f = [&](const QuadState& s, double tt) -> Deriv {
    return {s.v, acceleration(qp, s.q, u.thrust, sigma(tt)), quat_derivative(s.q, u.omega)};
  };
  auto advance = [&](const QuadState& s, const Deriv& d, double step) {
    QuadState r;
    r.p = s.p + d.dp * step;
    r.v = s.v + d.dv * step;
    r.q = quat_add_scaled(s.q, d.dq, step);
    return r;  // intermediate stages left unnormalized
  };
  for (int i = 0; i < substeps; ++i) {
    Deriv k1 = f(x, t);
    Deriv k2 = f(advance(x, k1, h / 2), t + h / 2);
    Deriv k3 = f(advance(x, k2, h / 2), t + h / 2);
    Deriv k4 = f(advance(x, k3, h), t + h);
    x.p += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    x.v += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    Quat dq((k1.dq.w() + 2 * k2.dq.w() + 2 * k3.dq.w() + k4.dq.w()) / 6.0,
            (k1.dq.x() + 2 * k2.dq.x() + 2 * k3.dq.x() + k4.dq.x()) / 6.0,
            (k1.dq.y() + 2 * k2.dq.y() + 2 * k3.dq.y() + k4.dq.y()) / 6.0,
            (k1.dq.z() + 2 * k2.dq.z() + 2 * k3.dq.z() + k4.dq.z()) / 6.0);
    x.q = quat_add_scaled(x.q, dq, h);
    x.q.normalize();
    t += h;
  }
  return x;
}

}  // namespace quadplan
