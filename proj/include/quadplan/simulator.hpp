#pragma once

#include <limits>
#include <string>
#include <vector>

#include "quadplan/gpio_observer.hpp"
#include "quadplan/scenario.hpp"

namespace quadplan {

/* collision-proximity score: 1 below the hard radius r, 0 beyond r + margin,
 * linear in between; margin = 0 degenerates to a step at r */
double risk_index(double dist, double drone_radius, double risk_margin);

/* One control-period sample. Everything here except solve_ms is a pure
 * function of scenario + seed, so the run log is bit-reproducible; wall time
 * goes to a separate sidecar file. */
struct StepLog {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quat q = Quat::Identity();
  double thrust = 0.0;
  double u_zeta = 0.0;  // applied thrust rate
  Vec3 u_omega = Vec3::Zero();
  double u_dv = 0.0;  // applied progress acceleration
  double theta = 0.0;
  double v_theta = 0.0;
  Vec3 sigma_true = Vec3::Zero();
  Vec3 sigma_hat = Vec3::Zero();
  double dist_static = std::numeric_limits<double>::infinity();
  double dist_dynamic = std::numeric_limits<double>::infinity();
  double h_static = std::numeric_limits<double>::infinity();
  double h_dynamic = std::numeric_limits<double>::infinity();
  double risk = 0.0;
  double lag_err = 0.0;
  double contour_err = 0.0;
  double tilt_deg = 0.0;
  int iterations = 0;
  bool degraded = false;
  double min_residual = 0.0;
  double kkt = 0.0;
  double solve_ms = 0.0;  // excluded from the deterministic log
};

struct PlanOutput {
  bool ok = false;
  std::string reason;
  Vec3 start = Vec3::Zero();  // after jitter
  SearchTrajectory search;
  BsplineTrajectory spline;
  RefTrajectory ref;
  OccupancyGrid grid;
  DistanceField df;
  bool has_static = false;
  std::vector<CylinderSpec> cylinders;  // explicit list plus generated forest
};

/* grid + field + global search + spline refinement + reference */
PlanOutput plan_scenario(const ScenarioSpec& spec);

struct EpisodeResult {
  bool success = false;
  std::string reason;  // empty on success; plan/collision/timeout/divergence otherwise
  double duration = 0.0;
  double avg_velocity = 0.0;
  double peak_velocity = 0.0;
  double risk = 0.0;
  double min_h_static = std::numeric_limits<double>::infinity();
  double min_dist_static = std::numeric_limits<double>::infinity();
  double min_h_dynamic = std::numeric_limits<double>::infinity();
  double min_dist_dynamic = std::numeric_limits<double>::infinity();
  double max_sigma_hat = 0.0;
  double mean_solve_ms = 0.0;
  int degraded_steps = 0;
  std::vector<StepLog> log;
  PlanOutput plan;
};

/* Deterministic closed loop at sim.dt: observer update, one local-planner
 * solve per period (the best iterate is applied even when the solve is
 * flagged degraded), plant integration with scripted disturbances and
 * moving obstacles. */
EpisodeResult run_episode(const ScenarioSpec& spec);

std::string run_log_csv(const EpisodeResult& r);
std::string solve_log_csv(const EpisodeResult& r);

struct BatchSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeResult> runs;
  double success_rate = 0.0;
  double avg_vel_mean = 0.0, avg_vel_std = 0.0;
  double peak_vel_mean = 0.0, peak_vel_std = 0.0;
  double risk_mean = 0.0, risk_std = 0.0;
  double min_h_static_mean = 0.0, min_h_static_std = 0.0;
  double solve_ms_mean = 0.0, solve_ms_std = 0.0;
};

BatchSummary run_batch(const ScenarioSpec& spec, const std::vector<std::uint64_t>& seeds);
std::string batch_csv(const BatchSummary& b);
std::string batch_table(const BatchSummary& b);

}  // namespace quadplan
