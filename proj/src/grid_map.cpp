#include "quadplan/grid_map.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace quadplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxDistance = std::numeric_limits<double>::max();
}  // namespace

OccupancyGrid::OccupancyGrid(double resolution, const Vec3& origin, const Vec3i& dims)
    : res_(resolution), origin_(origin), dims_(dims) {
  if (resolution <= 0.0) throw std::invalid_argument("grid resolution must be positive");
  if (dims.minCoeff() <= 0) throw std::invalid_argument("grid dims must be positive");
  occ_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), 0);
}

Vec3i OccupancyGrid::pos_to_cell(const Vec3& p) const {
  Vec3 c = (p - origin_) / res_;
  return Vec3i(static_cast<int>(std::floor(c.x())), static_cast<int>(std::floor(c.y())),
               static_cast<int>(std::floor(c.z())));
}

void OccupancyGrid::set_occupied(const Vec3i& c, bool value) {
  if (!inside(c)) throw std::out_of_range("set_occupied: cell outside grid");
  occ_[linear(c)] = value ? 1 : 0;
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto v : occ_) n += v;
  return n;
}

std::string OccupancyGrid::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["resolution"] = res_;
  j["origin"] = {origin_.x(), origin_.y(), origin_.z()};
  j["dims"] = {dims_.x(), dims_.y(), dims_.z()};
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  const std::size_t n = occ_.size();
  while (i < n) {
    if (occ_[i]) {
      std::size_t start = i;
      while (i < n && occ_[i]) ++i;
      runs.push_back({start, i - start});
    } else {
      ++i;
    }
  }
  j["occupied"] = std::move(runs);
  return j.dump();
}

OccupancyGrid OccupancyGrid::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("schema", 0) != 1) throw std::runtime_error("grid: unsupported schema");
  Vec3 origin(j["origin"][0].get<double>(), j["origin"][1].get<double>(),
              j["origin"][2].get<double>());
  Vec3i dims(j["dims"][0].get<int>(), j["dims"][1].get<int>(), j["dims"][2].get<int>());
  OccupancyGrid g(j["resolution"].get<double>(), origin, dims);
  for (const auto& run : j["occupied"]) {
    std::size_t start = run[0].get<std::size_t>();
    std::size_t len = run[1].get<std::size_t>();
    if (start + len > g.occ_.size()) throw std::runtime_error("grid: run outside volume");
    for (std::size_t k = start; k < start + len; ++k) g.occ_[k] = 1;
  }
  return g;
}

void rasterize_cylinder(OccupancyGrid& grid, double cx, double cy, double diameter,
                        double z0, double z1) {
  const double r = diameter / 2.0;
  const double res = grid.resolution();
  const Vec3& o = grid.origin();
  const Vec3i& d = grid.dims();
  int ix0 = std::max(0, static_cast<int>(std::floor((cx - r - o.x()) / res)));
  int ix1 = std::min(d.x() - 1, static_cast<int>(std::floor((cx + r - o.x()) / res)));
  int iy0 = std::max(0, static_cast<int>(std::floor((cy - r - o.y()) / res)));
  int iy1 = std::min(d.y() - 1, static_cast<int>(std::floor((cy + r - o.y()) / res)));
  for (int k = 0; k < d.z(); ++k) {
    double zc = o.z() + res * (k + 0.5);
    if (zc < z0 || zc > z1) continue;
    for (int jy = iy0; jy <= iy1; ++jy) {
      for (int jx = ix0; jx <= ix1; ++jx) {
        double dx = o.x() + res * (jx + 0.5) - cx;
        double dy = o.y() + res * (jy + 0.5) - cy;
        if (dx * dx + dy * dy <= r * r) grid.set_occupied(Vec3i(jx, jy, k));
      }
    }
  }
}

namespace {

/* 1D squared-distance lower envelope (Felzenszwalb/Huttenlocher). Entries with
 * f = inf carry no parabola; an all-inf row stays inf. */
void dt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  auto intersect = [&](int q, int p) {
    return ((f[q] + q * static_cast<double>(q)) - (f[p] + p * static_cast<double>(p))) /
           (2.0 * (q - p));
  };
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;  // no parabola at unseeded entries
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = intersect(q, v[k]);
    while (k > 0 && s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    double dq = q - static_cast<double>(v[j]);
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

DistanceField DistanceField::build(const OccupancyGrid& grid) {
  DistanceField out;
  out.res_ = grid.resolution();
  out.origin_ = grid.origin();
  out.dims_ = grid.dims();
  const int nx = out.dims_.x(), ny = out.dims_.y(), nz = out.dims_.z();
  std::vector<double>& sq = out.data_;
  sq.assign(static_cast<std::size_t>(nx) * ny * nz, kInf);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (grid.occupied(Vec3i(i, j, k))) sq[out.grid_linear(Vec3i(i, j, k))] = 0.0;

  const int nmax = std::max({nx, ny, nz});
  std::vector<double> f(nmax), d(nmax);
  std::vector<int> v;
  std::vector<double> z;

  for (int k = 0; k < nz; ++k)  // x pass
    for (int j = 0; j < ny; ++j) {
      std::size_t base = out.grid_linear(Vec3i(0, j, k));
      for (int i = 0; i < nx; ++i) f[i] = sq[base + i];
      dt1d(f.data(), d.data(), nx, v, z);
      for (int i = 0; i < nx; ++i) sq[base + i] = d[i];
    }
  const std::size_t sy = static_cast<std::size_t>(nx);
  for (int k = 0; k < nz; ++k)  // y pass
    for (int i = 0; i < nx; ++i) {
      std::size_t base = out.grid_linear(Vec3i(i, 0, k));
      for (int j = 0; j < ny; ++j) f[j] = sq[base + j * sy];
      dt1d(f.data(), d.data(), ny, v, z);
      for (int j = 0; j < ny; ++j) sq[base + j * sy] = d[j];
    }
  const std::size_t sz = static_cast<std::size_t>(nx) * ny;
  for (int j = 0; j < ny; ++j)  // z pass
    for (int i = 0; i < nx; ++i) {
      std::size_t base = out.grid_linear(Vec3i(i, j, 0));
      for (int k = 0; k < nz; ++k) f[k] = sq[base + k * sz];
      dt1d(f.data(), d.data(), nz, v, z);
      for (int k = 0; k < nz; ++k) sq[base + k * sz] = d[k];
    }

  for (auto& val : sq) val = (val == kInf) ? kMaxDistance : out.res_ * std::sqrt(val);
  return out;
}

DistanceSample DistanceField::sample(const Vec3& p) const {
  DistanceSample s;
  /* continuous coordinates in units of cells, cell centers at integers */
  Vec3 c = (p - origin_) / res_ - Vec3(0.5, 0.5, 0.5);
  int i0[3];
  double fr[3];
  bool clamped_axis[3];
  for (int a = 0; a < 3; ++a) {
    const int n = dims_[a];
    clamped_axis[a] = false;
    if (n == 1) {
      i0[a] = 0;
      fr[a] = 0.0;
      if (c[a] < 0.0 || c[a] > 0.0) clamped_axis[a] = true;
      continue;
    }
    double fi = std::floor(c[a]);
    int i = static_cast<int>(fi);
    double f = c[a] - fi;
    if (i < 0) {
      i = 0;
      f = 0.0;
      clamped_axis[a] = true;
    } else if (i > n - 2) {
      if (c[a] > n - 1.0) clamped_axis[a] = true;
      i = n - 2;
      f = c[a] - i;
      if (f > 1.0) f = 1.0;
    }
    i0[a] = i;
    fr[a] = f;
  }
  s.clamped = clamped_axis[0] || clamped_axis[1] || clamped_axis[2];

  double corner[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        Vec3i cc(std::min(i0[0] + dx, dims_.x() - 1), std::min(i0[1] + dy, dims_.y() - 1),
                 std::min(i0[2] + dz, dims_.z() - 1));
        corner[dx][dy][dz] = at(cc);
      }

  const double fx = fr[0], fy = fr[1], fz = fr[2];
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  /* collapse x, then y, then z */
  double cy0 = lerp(corner[0][0][0], corner[1][0][0], fx);
  double cy1 = lerp(corner[0][1][0], corner[1][1][0], fx);
  double cz0 = lerp(cy0, cy1, fy);
  double cy2 = lerp(corner[0][0][1], corner[1][0][1], fx);
  double cy3 = lerp(corner[0][1][1], corner[1][1][1], fx);
  double cz1 = lerp(cy2, cy3, fy);
  double val = lerp(cz0, cz1, fz);
  if (!std::isfinite(val)) val = kMaxDistance;
  s.distance = val;

  /* analytic derivative of the interpolant; zero along axes the query clamped */
  double gx = (lerp(lerp(corner[1][0][0] - corner[0][0][0], corner[1][1][0] - corner[0][1][0], fy),
                    lerp(corner[1][0][1] - corner[0][0][1], corner[1][1][1] - corner[0][1][1], fy),
                    fz)) /
              res_;
  double gy = lerp(cy1 - cy0, cy3 - cy2, fz) / res_;
  double gz = (cz1 - cz0) / res_;
  if (!std::isfinite(gx)) gx = 0.0;
  if (!std::isfinite(gy)) gy = 0.0;
  if (!std::isfinite(gz)) gz = 0.0;
  s.gradient = Vec3(clamped_axis[0] ? 0.0 : gx, clamped_axis[1] ? 0.0 : gy,
                    clamped_axis[2] ? 0.0 : gz);
  return s;
}

}  // namespace quadplan
