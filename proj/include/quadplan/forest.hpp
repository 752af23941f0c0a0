#pragma once

#include <cstdint>
#include <vector>

#include "quadplan/grid_map.hpp"

namespace quadplan {

/* vertical cylinder, axis through (cx, cy), occupying z0..z1 */
struct CylinderSpec {
  double cx = 0.0;
  double cy = 0.0;
  double diameter = 0.5;
  double z0 = 0.0;
  double z1 = 3.0;
};

struct ForestParams {
  double density = 0.0;  // cylinders per m^2; count = round(density * area)
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  double diameter_min = 0.4;
  double diameter_max = 0.6;
  double min_spacing = 0.9;  // pairwise center distance
  double z0 = 0.0, z1 = 3.0;
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  double clear_radius = 1.5;  // keep-out around start and goal, in the plane
  std::uint64_t seed = 1;
  int attempts_per_cylinder = 2000;
};

/* Rejection sampling, deterministic per seed. Throws std::runtime_error when
 * the attempt budget runs out (density too high for the spacing). */
std::vector<CylinderSpec> generate_forest(const ForestParams& params);

}  // namespace quadplan
