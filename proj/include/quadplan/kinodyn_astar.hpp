#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "quadplan/grid_map.hpp"

namespace quadplan {

struct SearchConfig {
  double tau = 0.4;            // primitive duration, s
  int n_accel = 2;             // 2n+1 acceleration values per axis
  Vec3 accel_min = Vec3(-6.0, -6.0, -6.0);
  Vec3 accel_max = Vec3(6.0, 6.0, 6.0);
  Vec3 vel_min = Vec3(-3.0, -3.0, -3.0);
  Vec3 vel_max = Vec3(3.0, 3.0, 3.0);
  double rho = 25.0;           // time weight in the cost g += (|a|^2 + rho) tau
  double goal_tolerance = 0.5;
  double vel_bin = 0.5;        // dedup bin width, m/s per axis
  double t_max_heuristic = 50.0;
  int max_expansions = 400000;
  int sweep_samples = 10;      // collision samples per primitive (tau/10)
};

struct SearchSegment {
  Vec3 accel = Vec3::Zero();
  double tau = 0.0;
};

/* constant-acceleration polynomial chain: p(t) = p + v t + a t^2 / 2 per segment */
struct SearchTrajectory {
  Vec3 p0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  std::vector<SearchSegment> segments;
  double cost = 0.0;

  double duration() const;
  Vec3 position_at(double t) const;
  Vec3 velocity_at(double t) const;
  std::string to_json() const;
  static SearchTrajectory from_json(const std::string& text);
};

/* Minimum of the closed-form optimally-controlled double-integrator cost
 * J(T) = sum_axis (a^2 T^3 / 3 + a b T^2 + b^2 T) plus rho T over T in
 * (0, t_max]; returns {J_control(T*), T*}. Identical boundary states give
 * {0, 0}. Coarse grid bracketing plus golden-section refinement to 1e-6. */
struct HeuristicResult {
  double cost = 0.0;
  double t_star = 0.0;
};
HeuristicResult heuristic_cost(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1,
                               double rho, double t_max);

enum class SearchStatus { Success, NoPath, ExpansionLimit };

struct SearchResult {
  SearchStatus status = SearchStatus::NoPath;
  SearchTrajectory trajectory;
  int expansions = 0;
};

/* Kinodynamic A* over constant-acceleration primitives. One node is retained
 * per (grid cell, velocity bin), lower g wins; ties in the open set break on
 * (f, g, cell index, insertion order) so runs are deterministic. A node whose
 * position is within goal_tolerance of the goal is a goal node and scores
 * h = 0, so the returned cost is the minimum over primitive sequences. */
SearchResult kinodyn_search(const OccupancyGrid& grid, const SearchConfig& cfg, const Vec3& p_start,
                            const Vec3& v_start, const Vec3& p_goal, const Vec3& v_goal);

}  // namespace quadplan
