#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "quadplan/grid_map.hpp"

namespace quadplan {

/* Cubic B-spline on a uniform unclamped knot vector. With control points
 * P_0..P_Nb the curve is defined for t in [t3, t_{Nb+1}]; span k >= 3 maps
 * alpha = (t - t_k)/dt through the standard cubic blending matrix. */
class BsplineTrajectory {
 public:
  BsplineTrajectory() = default;
  BsplineTrajectory(std::vector<Vec3> control_points, double knot_dt, double t_start);

  struct Eval {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();      // d/dt
    Vec3 acceleration = Vec3::Zero();  // d2/dt2
    bool clamped = false;              // t was outside the domain
  };
  Eval eval(double t) const;

  double t_start() const { return t_start_; }
  double t_end() const { return t_start_ + knot_dt_ * span_count(); }
  double knot_dt() const { return knot_dt_; }
  int span_count() const { return static_cast<int>(pts_.size()) - 3; }
  const std::vector<Vec3>& control_points() const { return pts_; }

  /* integral of |velocity| over [t_start, t], adaptive Simpson per span */
  double arc_length_at(double t, double tol = 1e-10) const;
  double total_arc_length(double tol = 1e-10) const { return arc_length_at(t_end(), tol); }

 private:
  std::vector<Vec3> pts_;
  double knot_dt_ = 1.0;
  double t_start_ = 0.0;
};

/* sum over consecutive control-point triples of |P_{i-3} - 2 P_{i-2} + P_{i-1}|,
 * i = 3..Nb; subgradient at zero-length terms taken as zero */
double smoothness_cost(const std::vector<Vec3>& pts, std::vector<Vec3>* grad = nullptr);

/* sum over i = 3..Nb-1 of | |P_{i-1}-P_{i-3}| - |P_i-P_{i-2}| |; eps > 0
 * replaces |x| with sqrt(x^2 + eps^2) - eps so the optimizer sees a C1 cost */
double uniformity_cost(const std::vector<Vec3>& pts, std::vector<Vec3>* grad = nullptr,
                       double eps = 0.0);

/* Least-squares cubic-spline fit to a sampled path. n_points control points,
 * samples at 4*n_points uniform times over [0, duration] plus a small ridge on
 * control-point second differences, endpoint interpolation (s(t3) = first
 * sample, s(t_end) = last sample) enforced exactly. */
BsplineTrajectory fit_bspline(const std::function<Vec3(double)>& path, double duration,
                              int n_points);

struct SplineOptimizeConfig {
  double w_smooth = 1.0;
  double w_uniform = 1.0;
  double w_clear = 100.0;
  double d_threshold = 0.8;  // clearance the penalty pushes interior points to
  double abs_eps = 1e-3;     // uniformity kink smoothing inside the optimizer
  int max_iters = 150;
  double grad_tol = 1e-6;
};

/* Quasi-second-order descent (L-BFGS directions, Armijo backtracking with
 * factor 0.5 from unit step) over interior control points 3..Nb-3; the first
 * and last three points are pinned so the fitted endpoint interpolation is
 * preserved. Accepted iterates decrease the objective monotonically. */
BsplineTrajectory optimize_bspline(const BsplineTrajectory& init, const DistanceField& df,
                                   const SplineOptimizeConfig& cfg);

/* Arc-length-parameterized lookup p(theta) = s(t3 + theta/L * (t_end - t3)).
 * For splines whose control points make the speed profile constant this is an
 * exact arc-length parameterization; otherwise uniformity_residual reports the
 * worst |d p/d theta| deviation from 1. */
class RefTrajectory {
 public:
  RefTrajectory() = default;
  static RefTrajectory build(const BsplineTrajectory& spline, double quad_tol = 1e-10);

  struct Ref {
    Vec3 position = Vec3::Zero();
    Vec3 tangent = Vec3::Zero();    // d p / d theta, deliberately unnormalized
    Vec3 dtangent = Vec3::Zero();   // d2 p / d theta2
  };
  Ref lookup(double theta) const;  // theta clamped to [0, total_length]

  double total_length() const { return length_; }
  const BsplineTrajectory& spline() const { return spline_; }
  double uniformity_residual(int samples = 1000) const;

  /* columns: theta,x,y,z,tx,ty,tz */
  std::string to_csv(double dtheta) const;

 private:
  BsplineTrajectory spline_;
  double length_ = 0.0;
};

}  // namespace quadplan
