#include "quadplan/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace quadplan {

double ellipsoid_boundary_distance(const Vec3& m, const Vec3& semi_axes) {
  const double n = m.norm();
  if (n < 1e-9) return semi_axes.x();
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double c = m[i] / n;
    s += c * c / (semi_axes[i] * semi_axes[i]);
  }
  return 1.0 / std::sqrt(s);
}

double h_static(const Vec3& p, const DistanceField& df, const CbfConfig& cfg, Vec3* grad) {
  const DistanceSample ds = df.sample(p);
  if (grad) *grad = ds.gradient;
  return ds.distance - cfg.drone_radius - cfg.risk_margin;
}

double h_dynamic(const Vec3& p, const Vec3& p_obs, const EllipsoidShape& shape,
                 const CbfConfig& cfg, Vec3* grad) {
  const Vec3 w = p - p_obs;
  const double dist = w.norm();
  if (dist < 1e-9) {
    if (grad) grad->setZero();
    return -shape.semi_axes.x() - cfg.drone_radius - cfg.risk_margin;
  }
  const Vec3 m = shape.rotation.transpose() * w;
  const double lo = ellipsoid_boundary_distance(m, shape.semi_axes);
  if (grad) {
    /* l_o = |m| / sqrt(m' D m); d l_o/dm, then back to world via the rotation */
    const Vec3 Dm(m.x() / (shape.semi_axes.x() * shape.semi_axes.x()),
                  m.y() / (shape.semi_axes.y() * shape.semi_axes.y()),
                  m.z() / (shape.semi_axes.z() * shape.semi_axes.z()));
    const double mn = m.norm();
    const double s = std::sqrt(m.dot(Dm));
    const Vec3 dlo_dm = m / (mn * s) - mn * Dm / (s * s * s);
    *grad = w / dist - shape.rotation * dlo_dm;
  }
  return dist - lo - cfg.drone_radius - cfg.risk_margin;
}

std::array<std::vector<double>, 3> hocbf_chain(const std::vector<double>& h,
                                               const std::array<double, 3>& c) {
  for (double ci : c)
    if (ci < 0.0 || ci >= 1.0) throw std::invalid_argument("hocbf rates must lie in [0, 1)");
  std::array<std::vector<double>, 3> out;
  const std::vector<double>* prev = &h;
  for (int level = 0; level < 3; ++level) {
    if (prev->size() < 2) throw std::invalid_argument("hocbf_chain: sequence too short");
    std::vector<double>& cur = out[static_cast<std::size_t>(level)];
    cur.resize(prev->size() - 1);
    for (std::size_t k = 0; k + 1 < prev->size(); ++k)
      cur[k] = (*prev)[k + 1] + (c[static_cast<std::size_t>(level)] - 1.0) * (*prev)[k];
    prev = &cur;
  }
  return out;
}

std::array<double, 4> hocbf_expansion_weights(const std::array<double, 3>& c) {
  const double a1 = c[0] - 1.0, a2 = c[1] - 1.0, a3 = c[2] - 1.0;
  return {a1 * a2 * a3, a1 * a2 + a1 * a3 + a2 * a3, a1 + a2 + a3, 1.0};
}

double BarrierResiduals::min_row() const {
  double m = std::numeric_limits<double>::max();
  for (double r : rows) m = std::min(m, r);
  return m;
}

namespace {

BarrierResiduals assemble(const std::vector<double>& h, int horizon, const CbfConfig& cfg) {
  BarrierResiduals out;
  out.h0_x0 = h[0];
  if (!cfg.use_cbf) {
    out.rows.assign(h.begin() + 1, h.begin() + horizon + 1);
    out.h3_x0 = 0.0;
    return out;
  }
  if (static_cast<int>(h.size()) < horizon + 3)
    throw std::invalid_argument("barrier residuals: rollout too short for the recursion");
  const auto chain = hocbf_chain(h, cfg.c);
  out.h3_x0 = chain[2][0];
  out.rows.clear();
  out.rows.push_back(chain[0][0]);  // h1(x0)
  out.rows.push_back(chain[1][0]);  // h2(x0)
  for (int k = 1; k <= horizon - 1; ++k) out.rows.push_back(chain[2][static_cast<std::size_t>(k)]);
  return out;
}

}  // namespace

BarrierResiduals static_barrier_residuals(const std::vector<Vec3>& positions, int horizon,
                                          const DistanceField& df, const CbfConfig& cfg) {
  std::vector<double> h(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) h[k] = h_static(positions[k], df, cfg);
  return assemble(h, horizon, cfg);
}

BarrierResiduals dynamic_barrier_residuals(const std::vector<Vec3>& positions, int horizon,
                                           const ObstacleSnapshot& obs, double stage_dt,
                                           const CbfConfig& cfg) {
  std::vector<double> h(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const Vec3 po = obs.position + obs.velocity * (stage_dt * static_cast<double>(k));
    h[k] = h_dynamic(positions[k], po, obs.shape, cfg);
  }
  return assemble(h, horizon, cfg);
}

}  // namespace quadplan
