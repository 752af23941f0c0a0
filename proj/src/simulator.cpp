#include "quadplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "quadplan/rng.hpp"

namespace quadplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_int(std::string& out, long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  out += buf;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/* surface distance to a moving ellipsoid: |p - p_o| minus the center-to-
 * boundary length along that direction */
double ellipsoid_surface_distance(const Vec3& p, const Vec3& p_obs, const EllipsoidShape& shape) {
  const Vec3 m = p - p_obs;
  const Vec3 body = shape.rotation.transpose() * m;
  return m.norm() - ellipsoid_boundary_distance(body, shape.semi_axes);
}

}  // namespace

double risk_index(double dist, double drone_radius, double risk_margin) {
  if (dist < drone_radius) return 1.0;
  if (risk_margin <= 0.0) return 0.0;
  if (dist <= drone_radius + risk_margin) return 1.0 - (dist - drone_radius) / risk_margin;
  return 0.0;
}

PlanOutput plan_scenario(const ScenarioSpec& spec) {
  PlanOutput out;
  out.grid = OccupancyGrid(spec.resolution, spec.origin, spec.dims);
  out.cylinders = spec.cylinders;
  if (spec.forest.enabled) {
    ForestParams fp;
    fp.density = spec.forest.density;
    fp.x0 = spec.forest.x0;
    fp.x1 = spec.forest.x1;
    fp.y0 = spec.forest.y0;
    fp.y1 = spec.forest.y1;
    fp.diameter_min = spec.forest.diameter_min;
    fp.diameter_max = spec.forest.diameter_max;
    fp.min_spacing = spec.forest.min_spacing;
    fp.z0 = spec.forest.z0;
    fp.z1 = spec.forest.z1;
    fp.start = spec.start_p;
    fp.goal = spec.goal_p;
    fp.clear_radius = spec.forest.clear_radius;
    fp.seed = spec.seed;
    const auto forest = generate_forest(fp);
    out.cylinders.insert(out.cylinders.end(), forest.begin(), forest.end());
  }
  for (const CylinderSpec& c : out.cylinders)
    rasterize_cylinder(out.grid, c.cx, c.cy, c.diameter, c.z0, c.z1);
  out.has_static = out.grid.occupied_count() > 0;
  out.df = DistanceField::build(out.grid);

  out.start = spec.start_p;
  if (spec.start_jitter > 0.0) {
    Rng rng(spec.seed ^ 0xda3e39cb94b95bdbULL);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vec3 cand =
          spec.start_p + Vec3(rng.uniform(-spec.start_jitter, spec.start_jitter),
                              rng.uniform(-spec.start_jitter, spec.start_jitter),
                              rng.uniform(-spec.start_jitter, spec.start_jitter));
      if (out.grid.free_at(cand)) {
        out.start = cand;
        break;
      }
    }
  }
  if (!out.grid.free_at(out.start)) {
    out.reason = "plan: start position occupied";
    return out;
  }
  if (!out.grid.free_at(spec.goal_p)) {
    out.reason = "plan: goal position occupied";
    return out;
  }

  const SearchResult sr =
      kinodyn_search(out.grid, spec.search, out.start, spec.start_v, spec.goal_p, Vec3::Zero());
  if (sr.status != SearchStatus::Success) {
    out.reason = sr.status == SearchStatus::NoPath ? "plan: no path found"
                                                   : "plan: expansion limit reached";
    return out;
  }
  out.search = sr.trajectory;

  const double duration = out.search.duration();
  const SearchTrajectory& traj = out.search;
  BsplineTrajectory fitted = fit_bspline([&](double t) { return traj.position_at(t); }, duration,
                                         std::max(8, spec.sim.spline_points));
  out.spline = optimize_bspline(fitted, out.df, spec.spline);
  out.ref = RefTrajectory::build(out.spline);
  out.ok = true;
  return out;
}

EpisodeResult run_episode(const ScenarioSpec& spec) {
  EpisodeResult r;
  r.plan = plan_scenario(spec);
  if (!r.plan.ok) {
    r.reason = r.plan.reason;
    return r;
  }
  const double dt = spec.sim.dt;
  const double L = r.plan.ref.total_length();
  const double hard_r = spec.cbf.drone_radius;
  const double margin = spec.cbf.risk_margin;

  QuadState x;
  x.p = r.plan.start;
  x.v = spec.start_v;
  double thrust = std::clamp(spec.quad.hover_thrust(), spec.quad.thrust_min, spec.quad.thrust_max);

  const GpioGains gains = gains_from_pole(spec.observer_pole);
  GpioState gpio;
  gpio.v_hat = x.v;

  double theta = 0.0, v_theta = 0.0;
  bool terminal = false;
  MpccSolution warm;
  bool have_warm = false;
  double since_shift = 0.0;
  Eigen::Vector4d u_prev = Eigen::Vector4d::Zero();

  auto sigma_at = [&](double t) {
    Vec3 s = Vec3::Zero();
    for (const DisturbanceEvent& ev : spec.disturbances)
      if (t >= ev.t0 && t < ev.t0 + ev.duration) s += ev.force / spec.quad.mass;
    return s;
  };

  const Vec3 lo = spec.origin - Vec3::Constant(1.0);
  const Vec3 hi = spec.origin + spec.resolution * spec.dims.cast<double>() + Vec3::Constant(1.0);
  const double v_diverged = 10.0 * std::max(spec.mpcc.v_theta_max, 1.0);
  const int max_steps = static_cast<int>(std::ceil(spec.sim.t_max / dt)) + 1;

  for (int step = 0; step <= max_steps; ++step) {
    const double t = step * dt;
    StepLog row;
    row.t = t;
    row.p = x.p;
    row.v = x.v;
    row.q = x.q;
    row.thrust = thrust;
    row.theta = theta;
    row.v_theta = v_theta;
    row.sigma_true = sigma_at(t);
    row.sigma_hat = disturbance_estimate(gpio);

    if (r.plan.has_static) {
      row.dist_static = r.plan.df.sample(x.p).distance;
      row.h_static = row.dist_static - hard_r - margin;
    }
    double risk = r.plan.has_static ? risk_index(row.dist_static, hard_r, margin) : 0.0;
    for (const DynamicObstacle& ob : spec.dynamic_obstacles) {
      const ObstacleState os = obstacle_state_at(ob.motion, t);
      const double d = ellipsoid_surface_distance(x.p, os.position, ob.shape);
      row.dist_dynamic = std::min(row.dist_dynamic, d);
      risk = std::max(risk, risk_index(d, hard_r, margin));
    }
    if (!spec.dynamic_obstacles.empty()) row.h_dynamic = row.dist_dynamic - hard_r - margin;
    row.risk = risk;

    const RefTrajectory::Ref ref_here = r.plan.ref.lookup(theta);
    const auto [el, ec] = lag_contour_errors(x.p, ref_here);
    row.lag_err = el.norm();
    row.contour_err = ec.norm();
    const Vec3 body_z = x.q * Vec3::UnitZ();
    row.tilt_deg = std::acos(std::clamp(body_z.z(), -1.0, 1.0)) * 180.0 / M_PI;

    /* termination checks on the current sample */
    const bool collided = (r.plan.has_static && row.dist_static < hard_r) ||
                          (!spec.dynamic_obstacles.empty() && row.dist_dynamic < hard_r);
    const bool at_goal = (x.p - spec.goal_p).norm() <= spec.goal_tolerance;
    const bool diverged = !x.p.allFinite() || !x.v.allFinite() || x.v.norm() > v_diverged ||
                          (x.p.array() < lo.array()).any() || (x.p.array() > hi.array()).any();
    if (collided || at_goal || diverged || step == max_steps) {
      r.log.push_back(row);
      if (collided) {
        r.reason = "collision";
      } else if (at_goal) {
        r.success = true;
      } else if (diverged) {
        r.reason = "divergence";
      } else {
        r.reason = "timeout";
      }
      r.duration = t;
      break;
    }

    MpccProblem prob;
    prob.x0.s = x;
    prob.x0.thrust = thrust;
    prob.prog0 = {theta, v_theta};
    prob.sigma0 = spec.variant.gpio ? disturbance_estimate(gpio) : Vec3::Zero();
    prob.u_prev = u_prev;
    prob.ref = &r.plan.ref;
    prob.df = r.plan.has_static ? &r.plan.df : nullptr;
    for (const DynamicObstacle& ob : spec.dynamic_obstacles) {
      const ObstacleState os = obstacle_state_at(ob.motion, t);
      prob.obstacles.push_back({ob.shape, os.position, os.velocity});
    }
    prob.quad = spec.quad;
    prob.cfg = spec.mpcc;
    prob.cbf = spec.cbf;
    prob.terminal = terminal;

    const MpccSolution sol = solve_mpcc(prob, have_warm ? &warm : nullptr);

    /* Degraded solves still return the best iterate found, which keeps
     * penalizing constraint violation; applying it beats replaying a stale
     * input open loop, which compounds over consecutive bad solves. */
    const Eigen::Vector4d applied = sol.inputs[0];
    const double dv_applied = sol.dv[0];
    if (sol.degraded) ++r.degraded_steps;
    row.u_zeta = applied[0];
    row.u_omega = applied.tail<3>();
    row.u_dv = dv_applied;
    row.iterations = sol.iterations;
    row.degraded = sol.degraded;
    row.min_residual = sol.min_residual;
    row.kkt = sol.kkt;
    row.solve_ms = sol.solve_ms;
    r.log.push_back(row);

    /* plant: thrust integrates the rate exactly, translation sees its mean */
    const double thrust_next =
        std::clamp(thrust + applied[0] * dt, spec.quad.thrust_min, spec.quad.thrust_max);
    ControlInput u;
    u.thrust = 0.5 * (thrust + thrust_next);
    u.omega = applied.tail<3>();
    const Quat q_pre = x.q;
    x = simulate_plant(spec.quad, x, u, sigma_at, t, dt, spec.sim.substeps);
    gpio = gpio_update(spec.quad, gpio, q_pre, u.thrust, x.v, gains, dt);
    thrust = thrust_next;

    if (!terminal) {
      theta += v_theta * dt + 0.5 * dv_applied * dt * dt;
      v_theta = std::clamp(v_theta + dv_applied * dt, 0.0, spec.mpcc.v_theta_max);
      if (theta >= L) {
        theta = L;
        v_theta = 0.0;
        terminal = true;
      }
    }

    warm = sol;
    have_warm = true;
    since_shift += dt;
    if (since_shift >= spec.mpcc.stage_dt - 1e-9) {
      warm = receding_shift(warm);
      since_shift -= spec.mpcc.stage_dt;
    }
    u_prev = applied;
  }

  /* metrics over every logged sample */
  double vel_acc = 0.0, risk_acc = 0.0, solve_acc = 0.0;
  int solve_count = 0;
  for (const StepLog& row : r.log) {
    const double speed = row.v.norm();
    vel_acc += speed;
    r.peak_velocity = std::max(r.peak_velocity, speed);
    risk_acc += row.risk;
    r.min_h_static = std::min(r.min_h_static, row.h_static);
    r.min_dist_static = std::min(r.min_dist_static, row.dist_static);
    r.min_h_dynamic = std::min(r.min_h_dynamic, row.h_dynamic);
    r.min_dist_dynamic = std::min(r.min_dist_dynamic, row.dist_dynamic);
    r.max_sigma_hat = std::max(r.max_sigma_hat, row.sigma_hat.norm());
    if (row.iterations > 0) {
      solve_acc += row.solve_ms;
      ++solve_count;
    }
  }
  if (!r.log.empty()) {
    r.avg_velocity = vel_acc / static_cast<double>(r.log.size());
    r.risk = risk_acc / static_cast<double>(r.log.size());
  }
  if (solve_count > 0) r.mean_solve_ms = solve_acc / solve_count;
  return r;
}

std::string run_log_csv(const EpisodeResult& r) {
  std::string out =
      "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,thrust,u_zeta,u_wx,u_wy,u_wz,u_dv,theta,v_theta,"
      "sig_x,sig_y,sig_z,sighat_x,sighat_y,sighat_z,dist_static,dist_dyn,h_static,h_dyn,"
      "risk,lag_err,contour_err,tilt_deg,iterations,degraded,min_residual,kkt\n";
  for (const StepLog& s : r.log) {
    const double nums[] = {s.t,           s.p.x(),       s.p.y(),         s.p.z(),
                           s.v.x(),       s.v.y(),       s.v.z(),         s.q.w(),
                           s.q.x(),       s.q.y(),       s.q.z(),         s.thrust,
                           s.u_zeta,      s.u_omega.x(), s.u_omega.y(),   s.u_omega.z(),
                           s.u_dv,        s.theta,       s.v_theta,       s.sigma_true.x(),
                           s.sigma_true.y(), s.sigma_true.z(), s.sigma_hat.x(), s.sigma_hat.y(),
                           s.sigma_hat.z(),  s.dist_static,  s.dist_dynamic, s.h_static,
                           s.h_dynamic,   s.risk,        s.lag_err,       s.contour_err,
                           s.tilt_deg};
    bool first = true;
    for (double v : nums) {
      if (!first) out += ',';
      append_num(out, v);
      first = false;
    }
    out += ',';
    append_int(out, s.iterations);
    out += ',';
    append_int(out, s.degraded ? 1 : 0);
    out += ',';
    append_num(out, s.min_residual);
    out += ',';
    append_num(out, s.kkt);
    out += '\n';
  }
  return out;
}

std::string solve_log_csv(const EpisodeResult& r) {
  std::string out = "t,solve_ms,iterations,kkt,degraded\n";
  for (const StepLog& s : r.log) {
    if (s.iterations == 0) continue;
    append_num(out, s.t);
    out += ',';
    append_num(out, s.solve_ms);
    out += ',';
    append_int(out, s.iterations);
    out += ',';
    append_num(out, s.kkt);
    out += ',';
    append_int(out, s.degraded ? 1 : 0);
    out += '\n';
  }
  return out;
}

BatchSummary run_batch(const ScenarioSpec& spec, const std::vector<std::uint64_t>& seeds) {
  BatchSummary b;
  b.seeds = seeds;
  std::vector<double> avg, peak, risk, minh, solve;
  int successes = 0;
  for (std::uint64_t seed : seeds) {
    ScenarioSpec s = spec;
    s.seed = seed;
    EpisodeResult r = run_episode(s);
    successes += r.success ? 1 : 0;
    avg.push_back(r.avg_velocity);
    peak.push_back(r.peak_velocity);
    risk.push_back(r.risk);
    if (std::isfinite(r.min_h_static)) minh.push_back(r.min_h_static);
    solve.push_back(r.mean_solve_ms);
    b.runs.push_back(std::move(r));
  }
  if (!seeds.empty())
    b.success_rate = static_cast<double>(successes) / static_cast<double>(seeds.size());
  b.avg_vel_mean = sample_mean(avg);
  b.avg_vel_std = sample_std(avg, b.avg_vel_mean);
  b.peak_vel_mean = sample_mean(peak);
  b.peak_vel_std = sample_std(peak, b.peak_vel_mean);
  b.risk_mean = sample_mean(risk);
  b.risk_std = sample_std(risk, b.risk_mean);
  b.min_h_static_mean = sample_mean(minh);
  b.min_h_static_std = sample_std(minh, b.min_h_static_mean);
  b.solve_ms_mean = sample_mean(solve);
  b.solve_ms_std = sample_std(solve, b.solve_ms_mean);
  return b;
}

std::string batch_csv(const BatchSummary& b) {
  std::string out =
      "seed,success,reason,duration,avg_velocity,peak_velocity,risk,min_h_static,"
      "degraded_steps,mean_solve_ms\n";
  for (std::size_t i = 0; i < b.runs.size(); ++i) {
    const EpisodeResult& r = b.runs[i];
    append_int(out, static_cast<long long>(b.seeds[i]));
    out += ',';
    append_int(out, r.success ? 1 : 0);
    out += ',';
    out += r.success ? "ok" : r.reason;
    out += ',';
    append_num(out, r.duration);
    out += ',';
    append_num(out, r.avg_velocity);
    out += ',';
    append_num(out, r.peak_velocity);
    out += ',';
    append_num(out, r.risk);
    out += ',';
    append_num(out, r.min_h_static);
    out += ',';
    append_int(out, r.degraded_steps);
    out += ',';
    append_num(out, r.mean_solve_ms);
    out += '\n';
  }
  auto summary_row = [&](const char* tag, double avg, double peak, double risk, double minh,
                         double solve) {
    out += tag;
    out += ",,,,";
    append_num(out, avg);
    out += ',';
    append_num(out, peak);
    out += ',';
    append_num(out, risk);
    out += ',';
    append_num(out, minh);
    out += ",,";
    append_num(out, solve);
    out += '\n';
  };
  summary_row("mean", b.avg_vel_mean, b.peak_vel_mean, b.risk_mean, b.min_h_static_mean,
              b.solve_ms_mean);
  summary_row("std", b.avg_vel_std, b.peak_vel_std, b.risk_std, b.min_h_static_std,
              b.solve_ms_std);
  out += "success_rate,";
  append_num(out, b.success_rate);
  out += '\n';
  return out;
}

std::string batch_table(const BatchSummary& b) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-8s %-8s %-12s %10s %10s %10s %10s %10s\n", "seed", "success",
                "reason", "avg_v", "peak_v", "risk", "min_h_s", "solve_ms");
  out += buf;
  for (std::size_t i = 0; i < b.runs.size(); ++i) {
    const EpisodeResult& r = b.runs[i];
    std::snprintf(buf, sizeof(buf), "%-8llu %-8s %-12s %10.3f %10.3f %10.4f %10.3f %10.2f\n",
                  static_cast<unsigned long long>(b.seeds[i]), r.success ? "yes" : "no",
                  r.success ? "ok" : r.reason.c_str(), r.avg_velocity, r.peak_velocity, r.risk,
                  r.min_h_static, r.mean_solve_ms);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-8s %-8.0f%% %-11s %10.3f %10.3f %10.4f %10.3f %10.2f\n",
                "mean", 100.0 * b.success_rate, "", b.avg_vel_mean, b.peak_vel_mean, b.risk_mean,
                b.min_h_static_mean, b.solve_ms_mean);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-8s %-8s %-12s %10.3f %10.3f %10.4f %10.3f %10.2f\n", "std",
                "", "", b.avg_vel_std, b.peak_vel_std, b.risk_std, b.min_h_static_std,
                b.solve_ms_std);
  out += buf;
  return out;
}

}  // namespace quadplan
