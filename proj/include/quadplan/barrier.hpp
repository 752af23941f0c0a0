#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "quadplan/dynamic_obstacle.hpp"
#include "quadplan/grid_map.hpp"

namespace quadplan {

struct CbfConfig {
  std::array<double, 3> c = {0.3, 0.3, 0.3};  // class-kappa rates, each in [0, 1)
  double drone_radius = 0.25;
  double risk_margin = 0.3;  // added to the radius inside every barrier
  bool use_cbf = true;       // false: plain per-stage distance constraints
};

/* Distance from an ellipsoid's center to its boundary along direction m
 * (given in the ellipsoid frame): (sum_axis mhat_axis^2 / l_axis^2)^(-1/2).
 * Degenerate |m| < 1e-9 returns the smallest semi-axis. */
double ellipsoid_boundary_distance(const Vec3& m, const Vec3& semi_axes);

/* static barrier d(p) - r - d_risk; gradient comes from the field sample */
double h_static(const Vec3& p, const DistanceField& df, const CbfConfig& cfg,
                Vec3* grad = nullptr);

/* dynamic barrier |p - p_o| - l_o - r - d_risk with l_o measured along the
 * center line in the ellipsoid frame */
double h_dynamic(const Vec3& p, const Vec3& p_obs, const EllipsoidShape& shape,
                 const CbfConfig& cfg, Vec3* grad = nullptr);

/* One recursion level: h_i[k] = h_{i-1}[k+1] + (c_i - 1) h_{i-1}[k]; applying
 * it three times to a sampled barrier sequence h[0..M] yields sequences of
 * length M, M-1, M-2. Each output is linear in the inputs. */
std::array<std::vector<double>, 3> hocbf_chain(const std::vector<double>& h,
                                               const std::array<double, 3>& c);

/* weights w such that h_3[k] = sum_m w[m] * h[k+m] for the given rates */
std::array<double, 4> hocbf_expansion_weights(const std::array<double, 3>& c);

struct ObstacleSnapshot {
  EllipsoidShape shape;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/* Constraint residuals for one barrier source over a rollout. In CBF mode the
 * constrained rows are h1(x0), h2(x0) and h3(xk) for k = 1..N-1 (evaluating
 * h3 at k = N-2, N-1 needs the two padded rollout states); h0(x0) is
 * input-independent and reported as a feasibility flag, h3(x0) as a
 * diagnostic. In plain-distance mode the rows are h(xk), k = 1..N. */
struct BarrierResiduals {
  double h0_x0 = 0.0;
  double h3_x0 = 0.0;              // diagnostic only
  std::vector<double> rows;        // the constrained residuals, see above
  double min_row() const;
};

/* positions must hold N+3 rollout positions (stages 0..N+2) in CBF mode and
 * at least N+1 in plain mode; obstacle positions are extrapolated with their
 * snapshot velocity at stage_dt intervals */
BarrierResiduals static_barrier_residuals(const std::vector<Vec3>& positions, int horizon,
                                          const DistanceField& df, const CbfConfig& cfg);
BarrierResiduals dynamic_barrier_residuals(const std::vector<Vec3>& positions, int horizon,
                                           const ObstacleSnapshot& obs, double stage_dt,
                                           const CbfConfig& cfg);

}  // namespace quadplan
