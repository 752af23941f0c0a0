#include "quadplan/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace quadplan {

namespace {

using nlohmann::json;

Vec3 as_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error(std::string("scenario: ") + what + " must be a 3-array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec3(const json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = as_vec3(j.at(key), key);
}

void maybe_vec4(const json& j, const char* key, Eigen::Vector4d& out) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 4)
    throw std::runtime_error(std::string("scenario: ") + key + " must be a 4-array");
  for (int i = 0; i < 4; ++i) out[i] = a[static_cast<std::size_t>(i)].get<double>();
}

Eigen::Matrix3d rotation_from_rpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

ObstacleMotion motion_from_json(const json& j) {
  ObstacleMotion m;
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant_velocity") {
    m.type = MotionType::ConstantVelocity;
    m.p0 = as_vec3(j.at("p0"), "motion.p0");
    maybe_vec3(j, "velocity", m.velocity);
  } else if (type == "back_and_forth") {
    m.type = MotionType::BackAndForth;
    m.e0 = as_vec3(j.at("e0"), "motion.e0");
    m.e1 = as_vec3(j.at("e1"), "motion.e1");
    maybe(j, "speed", m.speed);
  } else if (type == "pendulum") {
    m.type = MotionType::Pendulum;
    m.pivot = as_vec3(j.at("pivot"), "motion.pivot");
    maybe(j, "length", m.length);
    maybe(j, "amplitude", m.amplitude);
    maybe(j, "phase", m.phase);
    maybe_vec3(j, "swing_axis", m.swing_axis);
  } else {
    throw std::runtime_error("scenario: unknown motion type '" + type + "'");
  }
  return m;
}

json motion_to_json(const ObstacleMotion& m) {
  json j;
  switch (m.type) {
    case MotionType::ConstantVelocity:
      j["type"] = "constant_velocity";
      j["p0"] = {m.p0.x(), m.p0.y(), m.p0.z()};
      j["velocity"] = {m.velocity.x(), m.velocity.y(), m.velocity.z()};
      break;
    case MotionType::BackAndForth:
      j["type"] = "back_and_forth";
      j["e0"] = {m.e0.x(), m.e0.y(), m.e0.z()};
      j["e1"] = {m.e1.x(), m.e1.y(), m.e1.z()};
      j["speed"] = m.speed;
      break;
    case MotionType::Pendulum:
      j["type"] = "pendulum";
      j["pivot"] = {m.pivot.x(), m.pivot.y(), m.pivot.z()};
      j["length"] = m.length;
      j["amplitude"] = m.amplitude;
      j["phase"] = m.phase;
      j["swing_axis"] = {m.swing_axis.x(), m.swing_axis.y(), m.swing_axis.z()};
      break;
  }
  return j;
}

}  // namespace

ScenarioSpec scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!j.contains("schema") || j.at("schema").get<int>() != 1)
    throw std::runtime_error("scenario: missing or unsupported schema (expected 1)");

  ScenarioSpec s;
  maybe(j, "name", s.name);
  if (j.contains("map")) {
    const json& m = j.at("map");
    maybe(m, "resolution", s.resolution);
    maybe_vec3(m, "origin", s.origin);
    if (m.contains("dims")) {
      const json& d = m.at("dims");
      if (!d.is_array() || d.size() != 3)
        throw std::runtime_error("scenario: map.dims must be a 3-array");
      s.dims = Vec3i(d[0].get<int>(), d[1].get<int>(), d[2].get<int>());
    }
  }
  if (s.resolution <= 0.0) throw std::runtime_error("scenario: resolution must be positive");

  for (const json& c : j.value("cylinders", json::array())) {
    CylinderSpec cs;
    const json& ctr = c.at("center");
    if (!ctr.is_array() || ctr.size() != 2)
      throw std::runtime_error("scenario: cylinder center must be [x, y]");
    cs.cx = ctr[0].get<double>();
    cs.cy = ctr[1].get<double>();
    cs.diameter = c.at("diameter").get<double>();
    maybe(c, "z0", cs.z0);
    maybe(c, "z1", cs.z1);
    s.cylinders.push_back(cs);
  }

  if (j.contains("forest")) {
    const json& f = j.at("forest");
    s.forest.enabled = true;
    s.forest.density = f.at("density").get<double>();
    s.forest.x0 = f.at("x0").get<double>();
    s.forest.x1 = f.at("x1").get<double>();
    s.forest.y0 = f.at("y0").get<double>();
    s.forest.y1 = f.at("y1").get<double>();
    maybe(f, "diameter_min", s.forest.diameter_min);
    maybe(f, "diameter_max", s.forest.diameter_max);
    maybe(f, "min_spacing", s.forest.min_spacing);
    maybe(f, "z0", s.forest.z0);
    maybe(f, "z1", s.forest.z1);
    maybe(f, "clear_radius", s.forest.clear_radius);
  }

  for (const json& o : j.value("dynamic_obstacles", json::array())) {
    DynamicObstacle d;
    if (o.contains("shape")) {
      const json& sh = o.at("shape");
      maybe_vec3(sh, "semi_axes", d.shape.semi_axes);
      if (sh.contains("rpy")) d.shape.rotation = rotation_from_rpy(as_vec3(sh.at("rpy"), "rpy"));
    }
    d.motion = motion_from_json(o.at("motion"));
    validate(d.shape);
    s.dynamic_obstacles.push_back(d);
  }

  if (!j.contains("start") || !j.contains("goal"))
    throw std::runtime_error("scenario: start and goal are required");
  s.start_p = as_vec3(j.at("start").at("position"), "start.position");
  if (j.at("start").contains("velocity"))
    s.start_v = as_vec3(j.at("start").at("velocity"), "start.velocity");
  s.goal_p = as_vec3(j.at("goal").at("position"), "goal.position");
  maybe(j, "start_jitter", s.start_jitter);
  maybe(j, "goal_tolerance", s.goal_tolerance);

  for (const json& d : j.value("disturbances", json::array())) {
    DisturbanceEvent ev;
    ev.t0 = d.at("t0").get<double>();
    ev.duration = d.at("duration").get<double>();
    ev.force = as_vec3(d.at("force"), "disturbance force");
    s.disturbances.push_back(ev);
  }

  if (j.contains("sim")) {
    const json& sm = j.at("sim");
    maybe(sm, "dt", s.sim.dt);
    maybe(sm, "t_max", s.sim.t_max);
    maybe(sm, "substeps", s.sim.substeps);
    maybe(sm, "spline_points", s.sim.spline_points);
  }
  if (s.sim.dt <= 0.0 || s.sim.t_max <= 0.0 || s.sim.substeps < 1)
    throw std::runtime_error("scenario: invalid sim block");

  if (j.contains("variant")) {
    maybe(j.at("variant"), "cbf", s.variant.cbf);
    maybe(j.at("variant"), "gpio", s.variant.gpio);
  }
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();

  s.search.goal_tolerance = s.goal_tolerance;
  if (j.contains("search")) {
    const json& sc = j.at("search");
    maybe(sc, "tau", s.search.tau);
    maybe(sc, "n_accel", s.search.n_accel);
    if (sc.contains("accel_max")) {
      const double a = sc.at("accel_max").get<double>();
      s.search.accel_max = Vec3(a, a, a);
      s.search.accel_min = -s.search.accel_max;
    }
    if (sc.contains("vel_max")) {
      const double v = sc.at("vel_max").get<double>();
      s.search.vel_max = Vec3(v, v, v);
      s.search.vel_min = -s.search.vel_max;
    }
    maybe(sc, "rho", s.search.rho);
    maybe(sc, "goal_tolerance", s.search.goal_tolerance);
    maybe(sc, "vel_bin", s.search.vel_bin);
    maybe(sc, "max_expansions", s.search.max_expansions);
  }

  if (j.contains("spline")) {
    const json& sp = j.at("spline");
    maybe(sp, "w_smooth", s.spline.w_smooth);
    maybe(sp, "w_uniform", s.spline.w_uniform);
    maybe(sp, "w_clear", s.spline.w_clear);
    maybe(sp, "d_threshold", s.spline.d_threshold);
    maybe(sp, "max_iters", s.spline.max_iters);
  }

  if (j.contains("mpcc")) {
    const json& m = j.at("mpcc");
    maybe(m, "horizon", s.mpcc.horizon);
    maybe(m, "stage_dt", s.mpcc.stage_dt);
    maybe(m, "v_theta_max", s.mpcc.v_theta_max);
    maybe(m, "dv_min", s.mpcc.dv_min);
    maybe(m, "dv_max", s.mpcc.dv_max);
    if (m.contains("weights")) {
      const json& w = m.at("weights");
      maybe(w, "q_l", s.mpcc.weights.q_l);
      maybe(w, "q_c", s.mpcc.weights.q_c);
      maybe_vec4(w, "q_u", s.mpcc.weights.q_u);
      maybe(w, "r_dv", s.mpcc.weights.r_dv);
      maybe_vec4(w, "r_du", s.mpcc.weights.r_du);
      maybe(w, "mu", s.mpcc.weights.mu);
    }
    if (m.contains("solver")) {
      const json& so = m.at("solver");
      maybe(so, "max_iters", s.mpcc.solver.max_iters);
      maybe(so, "kkt_tol", s.mpcc.solver.kkt_tol);
      maybe(so, "feas_tol", s.mpcc.solver.feas_tol);
      maybe(so, "penalty_init", s.mpcc.solver.penalty_init);
      maybe(so, "penalty_scale", s.mpcc.solver.penalty_scale);
      maybe(so, "penalty_max", s.mpcc.solver.penalty_max);
      maybe(so, "multiplier_every", s.mpcc.solver.multiplier_every);
    }
  }

  if (j.contains("cbf")) {
    const json& c = j.at("cbf");
    if (c.contains("c")) {
      const json& cc = c.at("c");
      if (cc.is_array()) {
        if (cc.size() != 3) throw std::runtime_error("scenario: cbf.c must be scalar or 3-array");
        for (int i = 0; i < 3; ++i)
          s.cbf.c[static_cast<std::size_t>(i)] = cc[static_cast<std::size_t>(i)].get<double>();
      } else {
        const double v = cc.get<double>();
        s.cbf.c = {v, v, v};
      }
    }
    maybe(c, "drone_radius", s.cbf.drone_radius);
    maybe(c, "risk_margin", s.cbf.risk_margin);
  }
  s.cbf.use_cbf = s.variant.cbf;

  if (j.contains("observer")) maybe(j.at("observer"), "pole", s.observer_pole);
  if (s.observer_pole <= 0.0) throw std::runtime_error("scenario: observer pole must be positive");

  if (j.contains("quad")) {
    const json& q = j.at("quad");
    maybe(q, "mass", s.quad.mass);
    maybe(q, "thrust_min", s.quad.thrust_min);
    maybe(q, "thrust_max", s.quad.thrust_max);
    if (q.contains("thrust_rate_max")) {
      s.quad.thrust_rate_max = q.at("thrust_rate_max").get<double>();
      s.quad.thrust_rate_min = -s.quad.thrust_rate_max;
    }
    if (q.contains("omega_max")) {
      const double w = q.at("omega_max").get<double>();
      s.quad.omega_max = Vec3(w, w, w);
      s.quad.omega_min = -s.quad.omega_max;
    }
  }
  return s;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

std::string scenario_to_json_text(const ScenarioSpec& s) {
  json j;
  j["schema"] = 1;
  j["name"] = s.name;
  j["map"] = {{"resolution", s.resolution},
              {"origin", {s.origin.x(), s.origin.y(), s.origin.z()}},
              {"dims", {s.dims.x(), s.dims.y(), s.dims.z()}}};
  json cyl = json::array();
  for (const CylinderSpec& c : s.cylinders)
    cyl.push_back({{"center", {c.cx, c.cy}}, {"diameter", c.diameter}, {"z0", c.z0}, {"z1", c.z1}});
  j["cylinders"] = cyl;
  if (s.forest.enabled) {
    j["forest"] = {{"density", s.forest.density},
                   {"x0", s.forest.x0},
                   {"x1", s.forest.x1},
                   {"y0", s.forest.y0},
                   {"y1", s.forest.y1},
                   {"diameter_min", s.forest.diameter_min},
                   {"diameter_max", s.forest.diameter_max},
                   {"min_spacing", s.forest.min_spacing},
                   {"z0", s.forest.z0},
                   {"z1", s.forest.z1},
                   {"clear_radius", s.forest.clear_radius}};
  }
  json dyn = json::array();
  for (const DynamicObstacle& d : s.dynamic_obstacles) {
    const Vec3 rpy = d.shape.rotation.eulerAngles(2, 1, 0);  // yaw, pitch, roll
    dyn.push_back({{"shape",
                    {{"semi_axes", {d.shape.semi_axes.x(), d.shape.semi_axes.y(),
                                    d.shape.semi_axes.z()}},
                     {"rpy", {rpy.z(), rpy.y(), rpy.x()}}}},
                   {"motion", motion_to_json(d.motion)}});
  }
  j["dynamic_obstacles"] = dyn;
  j["start"] = {{"position", {s.start_p.x(), s.start_p.y(), s.start_p.z()}},
                {"velocity", {s.start_v.x(), s.start_v.y(), s.start_v.z()}}};
  j["goal"] = {{"position", {s.goal_p.x(), s.goal_p.y(), s.goal_p.z()}}};
  j["start_jitter"] = s.start_jitter;
  j["goal_tolerance"] = s.goal_tolerance;
  json dist = json::array();
  for (const DisturbanceEvent& ev : s.disturbances)
    dist.push_back({{"t0", ev.t0},
                    {"duration", ev.duration},
                    {"force", {ev.force.x(), ev.force.y(), ev.force.z()}}});
  j["disturbances"] = dist;
  j["sim"] = {{"dt", s.sim.dt},
              {"t_max", s.sim.t_max},
              {"substeps", s.sim.substeps},
              {"spline_points", s.sim.spline_points}};
  j["variant"] = {{"cbf", s.variant.cbf}, {"gpio", s.variant.gpio}};
  j["seed"] = s.seed;
  j["search"] = {{"tau", s.search.tau},
                 {"n_accel", s.search.n_accel},
                 {"accel_max", s.search.accel_max.x()},
                 {"vel_max", s.search.vel_max.x()},
                 {"rho", s.search.rho},
                 {"goal_tolerance", s.search.goal_tolerance},
                 {"vel_bin", s.search.vel_bin},
                 {"max_expansions", s.search.max_expansions}};
  j["spline"] = {{"w_smooth", s.spline.w_smooth},
                 {"w_uniform", s.spline.w_uniform},
                 {"w_clear", s.spline.w_clear},
                 {"d_threshold", s.spline.d_threshold},
                 {"max_iters", s.spline.max_iters}};
  j["mpcc"] = {{"horizon", s.mpcc.horizon},
               {"stage_dt", s.mpcc.stage_dt},
               {"v_theta_max", s.mpcc.v_theta_max},
               {"dv_min", s.mpcc.dv_min},
               {"dv_max", s.mpcc.dv_max},
               {"weights",
                {{"q_l", s.mpcc.weights.q_l},
                 {"q_c", s.mpcc.weights.q_c},
                 {"q_u", {s.mpcc.weights.q_u[0], s.mpcc.weights.q_u[1], s.mpcc.weights.q_u[2],
                          s.mpcc.weights.q_u[3]}},
                 {"r_dv", s.mpcc.weights.r_dv},
                 {"r_du", {s.mpcc.weights.r_du[0], s.mpcc.weights.r_du[1], s.mpcc.weights.r_du[2],
                           s.mpcc.weights.r_du[3]}},
                 {"mu", s.mpcc.weights.mu}}},
               {"solver",
                {{"max_iters", s.mpcc.solver.max_iters},
                 {"kkt_tol", s.mpcc.solver.kkt_tol},
                 {"feas_tol", s.mpcc.solver.feas_tol},
                 {"penalty_init", s.mpcc.solver.penalty_init},
                 {"penalty_scale", s.mpcc.solver.penalty_scale},
                 {"penalty_max", s.mpcc.solver.penalty_max},
                 {"multiplier_every", s.mpcc.solver.multiplier_every}}}};
  j["cbf"] = {{"c", {s.cbf.c[0], s.cbf.c[1], s.cbf.c[2]}},
              {"drone_radius", s.cbf.drone_radius},
              {"risk_margin", s.cbf.risk_margin}};
  j["observer"] = {{"pole", s.observer_pole}};
  j["quad"] = {{"mass", s.quad.mass},
               {"thrust_min", s.quad.thrust_min},
               {"thrust_max", s.quad.thrust_max},
               {"thrust_rate_max", s.quad.thrust_rate_max},
               {"omega_max", s.quad.omega_max.x()}};
  return j.dump(2) + "\n";
}

}  // namespace quadplan
