#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quadplan/barrier.hpp"
#include "quadplan/bspline.hpp"
#include "quadplan/dynamic_obstacle.hpp"
#include "quadplan/forest.hpp"
#include "quadplan/kinodyn_astar.hpp"
#include "quadplan/mpcc.hpp"
#include "quadplan/quad_model.hpp"

namespace quadplan {

struct DisturbanceEvent {
  double t0 = 0.0;
  double duration = 0.0;
  Vec3 force = Vec3::Zero();  // N, applied to the plant as force/mass
};

struct ForestSpec {
  bool enabled = false;
  double density = 0.0;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double diameter_min = 0.4, diameter_max = 0.6;
  double min_spacing = 0.9;
  double z0 = 0.0, z1 = 3.0;
  double clear_radius = 1.5;
};

struct VariantFlags {
  bool cbf = true;   // false: plain per-stage distance constraints
  bool gpio = true;  // false: local planner sees a zero disturbance estimate
};

struct SimParams {
  double dt = 0.02;        // control period, one solver call each
  double t_max = 30.0;     // episode timeout, simulated seconds
  int substeps = 4;        // plant integration substeps per control period
  int spline_points = 30;  // control points of the fitted reference spline
};

/* One closed-loop experiment, loadable from versioned JSON (schema 1).
 * The seed drives every stochastic choice: start jitter and forest layout. */
struct ScenarioSpec {
  std::string name = "scenario";
  double resolution = 0.1;
  Vec3 origin = Vec3::Zero();
  Vec3i dims = Vec3i(200, 60, 30);
  std::vector<CylinderSpec> cylinders;
  ForestSpec forest;
  std::vector<DynamicObstacle> dynamic_obstacles;
  Vec3 start_p = Vec3::Zero();
  Vec3 start_v = Vec3::Zero();
  Vec3 goal_p = Vec3::Zero();
  double start_jitter = 0.0;  // uniform per-axis offset, resampled into free space
  double goal_tolerance = 0.5;
  std::vector<DisturbanceEvent> disturbances;
  SimParams sim;
  VariantFlags variant;
  std::uint64_t seed = 1;
  SearchConfig search;
  SplineOptimizeConfig spline;
  MpccConfig mpcc;
  CbfConfig cbf;
  double observer_pole = 15.0;
  QuadParams quad;
};

ScenarioSpec scenario_from_json_text(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);
std::string scenario_to_json_text(const ScenarioSpec& spec);

}  // namespace quadplan
