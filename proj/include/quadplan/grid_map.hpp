#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace quadplan {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

/* Axis-aligned voxel grid. Cell (i,j,k) covers
 * [origin + res*(i,j,k), origin + res*(i+1,j+1,k+1)); its center sits at
 * origin + res*(i+.5, j+.5, k+.5). Linear index = i + nx*(j + ny*k). */
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(double resolution, const Vec3& origin, const Vec3i& dims);

  double resolution() const { return res_; }
  const Vec3& origin() const { return origin_; }
  const Vec3i& dims() const { return dims_; }
  std::size_t cell_count() const { return occ_.size(); }

  bool inside(const Vec3i& c) const {
    return c.x() >= 0 && c.y() >= 0 && c.z() >= 0 && c.x() < dims_.x() &&
           c.y() < dims_.y() && c.z() < dims_.z();
  }
  Vec3i pos_to_cell(const Vec3& p) const;
  Vec3 cell_center(const Vec3i& c) const {
    return origin_ + res_ * (c.cast<double>() + Vec3(0.5, 0.5, 0.5));
  }
  std::size_t linear(const Vec3i& c) const {
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(c.y()) +
                static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(c.z()));
  }

  /* out-of-range cells count as occupied: the world ends at the map border */
  bool occupied(const Vec3i& c) const { return !inside(c) || occ_[linear(c)] != 0; }
  void set_occupied(const Vec3i& c, bool value = true);
  std::size_t occupied_count() const;
  bool free_at(const Vec3& p) const { return !occupied(pos_to_cell(p)); }

  /* JSON with an RLE run list over linear indices; round-trips exactly */
  std::string to_json() const;
  static OccupancyGrid from_json(const std::string& text);

 private:
  double res_ = 0.1;
  Vec3 origin_ = Vec3::Zero();
  Vec3i dims_ = Vec3i::Zero();
  std::vector<std::uint8_t> occ_;
};

/* occupy every cell whose center lies within the vertical cylinder
 * (|xy - center| <= diameter/2, z in [z0, z1]) */
void rasterize_cylinder(OccupancyGrid& grid, double cx, double cy, double diameter,
                        double z0, double z1);

struct DistanceSample {
  double distance = 0.0;
  Vec3 gradient = Vec3::Zero();
  bool clamped = false;  // query left the sampled volume and was clamped to it
};

/* Exact (cell-center to cell-center) Euclidean distance field of an occupancy
 * grid, three separable lower-envelope passes over squared distances. Queries
 * interpolate trilinearly between cell centers; gradient is the interpolant's
 * analytic derivative. A grid with no occupied cells gives the largest finite
 * double everywhere. */
class DistanceField {
 public:
  DistanceField() = default;
  static DistanceField build(const OccupancyGrid& grid);

  DistanceSample sample(const Vec3& p) const;
  double at(const Vec3i& c) const { return data_[grid_linear(c)]; }
  const Vec3i& dims() const { return dims_; }
  double resolution() const { return res_; }
  const Vec3& origin() const { return origin_; }

 private:
  std::size_t grid_linear(const Vec3i& c) const {
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(c.y()) +
                static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(c.z()));
  }
  double res_ = 0.1;
  Vec3 origin_ = Vec3::Zero();
  Vec3i dims_ = Vec3i::Zero();
  std::vector<double> data_;
};

}  // namespace quadplan
