#include "quadplan/forest.hpp"

#include <cmath>
#include <stdexcept>

#include "quadplan/rng.hpp"

namespace quadplan {

std::vector<CylinderSpec> generate_forest(const ForestParams& fp) {
  if (fp.x1 <= fp.x0 || fp.y1 <= fp.y0) throw std::invalid_argument("forest: empty region");
  if (fp.density < 0.0) throw std::invalid_argument("forest: negative density");
  const double area = (fp.x1 - fp.x0) * (fp.y1 - fp.y0);
  const long long count = std::llround(fp.density * area);
  std::vector<CylinderSpec> out;
  if (count == 0) return out;

  Rng rng(fp.seed);
  auto hypot2 = [](double dx, double dy) { return std::sqrt(dx * dx + dy * dy); };
  long long attempts = 0;
  const long long budget = count * static_cast<long long>(fp.attempts_per_cylinder);
  while (static_cast<long long>(out.size()) < count) {
    if (attempts++ > budget)
      throw std::runtime_error(
          "forest: attempt budget exhausted; lower the density or the spacing");
    CylinderSpec c;
    c.cx = rng.uniform(fp.x0, fp.x1);
    c.cy = rng.uniform(fp.y0, fp.y1);
    c.diameter = rng.uniform(fp.diameter_min, fp.diameter_max);
    c.z0 = fp.z0;
    c.z1 = fp.z1;
    if (hypot2(c.cx - fp.start.x(), c.cy - fp.start.y()) < fp.clear_radius) continue;
    if (hypot2(c.cx - fp.goal.x(), c.cy - fp.goal.y()) < fp.clear_radius) continue;
    bool ok = true;
    for (const CylinderSpec& other : out) {
      if (hypot2(c.cx - other.cx, c.cy - other.cy) < fp.min_spacing) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(c);
  }
  return out;
}

}  // namespace quadplan
