#include "quadplan/kinodyn_astar.hpp"

#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace quadplan {

double SearchTrajectory::duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.tau;
  return t;
}

Vec3 SearchTrajectory::position_at(double t) const {
  Vec3 p = p0, v = v0;
  for (const auto& s : segments) {
    const double dt = std::min(t, s.tau);
    if (dt <= 0.0) break;
    p += v * dt + 0.5 * dt * dt * s.accel;
    v += s.accel * dt;
    t -= dt;
  }
  return p;
}

Vec3 SearchTrajectory::velocity_at(double t) const {
  Vec3 v = v0;
  for (const auto& s : segments) {
    const double dt = std::min(t, s.tau);
    if (dt <= 0.0) break;
    v += s.accel * dt;
    t -= dt;
  }
  return v;
}

std::string SearchTrajectory::to_json() const {
  nlohmann::json j;
  j["p0"] = {p0.x(), p0.y(), p0.z()};
  j["v0"] = {v0.x(), v0.y(), v0.z()};
  j["cost"] = cost;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : segments)
    segs.push_back({{"a", {s.accel.x(), s.accel.y(), s.accel.z()}}, {"tau", s.tau}});
  j["segments"] = std::move(segs);
  return j.dump();
}

SearchTrajectory SearchTrajectory::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SearchTrajectory t;
  for (int i = 0; i < 3; ++i) {
    t.p0[i] = j["p0"][i].get<double>();
    t.v0[i] = j["v0"][i].get<double>();
  }
  t.cost = j["cost"].get<double>();
  for (const auto& s : j["segments"]) {
    SearchSegment seg;
    for (int i = 0; i < 3; ++i) seg.accel[i] = s["a"][i].get<double>();
    seg.tau = s["tau"].get<double>();
    t.segments.push_back(seg);
  }
  return t;
}

namespace {

double control_cost_at(const Vec3& dp, const Vec3& dv, double T) {
  double j = 0.0;
  const double T2 = T * T, T3 = T2 * T;
  for (int axis = 0; axis < 3; ++axis) {
    const double a = (-12.0 * dp[axis] + 6.0 * T * dv[axis]) / T3;
    const double b = (6.0 * T * dp[axis] - 2.0 * T2 * dv[axis]) / T3;
    j += a * a * T3 / 3.0 + a * b * T2 + b * b * T;
  }
  return j;
}

}  // namespace

HeuristicResult heuristic_cost(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1,
                               double rho, double t_max) {
  if ((p1 - p0).norm() < 1e-12 && (v1 - v0).norm() < 1e-12) return {0.0, 0.0};

  auto total = [&](double T) {
    const Vec3 dp = p1 - p0 - v0 * T;
    const Vec3 dv = v1 - v0;
    return control_cost_at(dp, dv, T) + rho * T;
  };

  /* geometric coarse grid, then golden section inside the best bracket */
  constexpr int kGrid = 160;
  const double t_lo = 1e-3;
  double best_t = t_lo, best_v = total(t_lo);
  double prev_t = t_lo;
  double lo = t_lo, hi = t_max;
  const double ratio = std::pow(t_max / t_lo, 1.0 / (kGrid - 1));
  double t = t_lo;
  for (int i = 1; i < kGrid; ++i) {
    double tn = t * ratio;
    const double vn = total(tn);
    if (vn < best_v) {
      best_v = vn;
      best_t = tn;
      lo = prev_t;
      hi = std::min(tn * ratio, t_max);
    }
    prev_t = t;
    t = tn;
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = total(c), fd = total(d);
  while (b - a > 1e-6) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = total(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = total(d);
    }
  }
  const double ts = 0.5 * (a + b);
  const double tv = total(ts);
  if (tv < best_v) {
    best_v = tv;
    best_t = ts;
  }
  const Vec3 dp = p1 - p0 - v0 * best_t;
  return {control_cost_at(dp, v1 - v0, best_t), best_t};
}

namespace {

struct Node {
  Vec3 p, v;
  double g = 0.0;
  int parent = -1;
  Vec3 accel = Vec3::Zero();
};

struct OpenEntry {
  double f, g;
  std::uint64_t cell;
  std::uint64_t seq;
  int node;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (g != o.g) return g > o.g;
    if (cell != o.cell) return cell > o.cell;
    return seq > o.seq;
  }
};

struct DedupKey {
  std::int64_t cell;
  std::int32_t vb[3];
  bool operator==(const DedupKey& o) const {
    return cell == o.cell && vb[0] == o.vb[0] && vb[1] == o.vb[1] && vb[2] == o.vb[2];
  }
};

struct DedupHash {
  std::size_t operator()(const DedupKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.cell) * 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 3; ++i)
      h = (h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.vb[i]))) *
          0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(h ^ (h >> 31));
  }
};

}  // namespace

SearchResult kinodyn_search(const OccupancyGrid& grid, const SearchConfig& cfg,
                            const Vec3& p_start, const Vec3& v_start, const Vec3& p_goal,
                            const Vec3& v_goal) {
  if (!grid.free_at(p_start)) throw std::invalid_argument("kinodyn_search: start cell occupied");
  if (!grid.free_at(p_goal)) throw std::invalid_argument("kinodyn_search: goal cell occupied");

  SearchResult res;
  res.trajectory.p0 = p_start;
  res.trajectory.v0 = v_start;
  if ((p_start - p_goal).norm() <= cfg.goal_tolerance) {
    res.status = SearchStatus::Success;
    return res;
  }

  /* per-axis primitive values: n negative fractions of accel_min, zero,
   * n positive fractions of accel_max */
  std::vector<double> prim[3];
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = cfg.n_accel; i >= 1; --i)
      prim[axis].push_back(cfg.accel_min[axis] * i / cfg.n_accel);
    prim[axis].push_back(0.0);
    for (int i = 1; i <= cfg.n_accel; ++i)
      prim[axis].push_back(cfg.accel_max[axis] * i / cfg.n_accel);
  }

  auto cell_of = [&](const Vec3& p) -> std::int64_t {
    const Vec3i c = grid.pos_to_cell(p);
    if (!grid.inside(c)) return -1;
    return static_cast<std::int64_t>(grid.linear(c));
  };
  auto key_of = [&](std::int64_t cell, const Vec3& v) {
    DedupKey k;
    k.cell = cell;
    for (int i = 0; i < 3; ++i) k.vb[i] = static_cast<std::int32_t>(std::floor(v[i] / cfg.vel_bin));
    return k;
  };
  auto h_of = [&](const Vec3& p, const Vec3& v) {
    if ((p - p_goal).norm() <= cfg.goal_tolerance) return 0.0;
    return heuristic_cost(p, v, p_goal, v_goal, cfg.rho, cfg.t_max_heuristic).cost;
  };

  std::vector<Node> arena;
  std::unordered_map<DedupKey, int, DedupHash> best;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<OpenEntry>> open;
  std::uint64_t seq = 0;

  arena.push_back({p_start, v_start, 0.0, -1, Vec3::Zero()});
  best[key_of(cell_of(p_start), v_start)] = 0;
  open.push({h_of(p_start, v_start), 0.0, static_cast<std::uint64_t>(cell_of(p_start)), seq++, 0});

  const double tau = cfg.tau;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const Node nd = arena[static_cast<std::size_t>(top.node)];
    {
      /* stale entry: a cheaper node for this key has been queued since */
      auto it = best.find(key_of(cell_of(nd.p), nd.v));
      if (it != best.end() && it->second != top.node) continue;
    }

    if ((nd.p - p_goal).norm() <= cfg.goal_tolerance) {
      std::vector<SearchSegment> segs;
      for (int i = top.node; arena[static_cast<std::size_t>(i)].parent >= 0;
           i = arena[static_cast<std::size_t>(i)].parent)
        segs.push_back({arena[static_cast<std::size_t>(i)].accel, tau});
      res.trajectory.segments.assign(segs.rbegin(), segs.rend());
      res.trajectory.cost = nd.g;
      res.status = SearchStatus::Success;
      return res;
    }

    if (++res.expansions > cfg.max_expansions) {
      res.status = SearchStatus::ExpansionLimit;
      return res;
    }

    const std::int64_t cell_cur = cell_of(nd.p);
    for (double ax : prim[0])
      for (double ay : prim[1])
        for (double az : prim[2]) {
          const Vec3 a(ax, ay, az);
          const Vec3 vn = nd.v + a * tau;
          bool ok = true;
          for (int i = 0; i < 3 && ok; ++i)
            ok = vn[i] >= cfg.vel_min[i] && vn[i] <= cfg.vel_max[i];
          if (!ok) continue;
          const Vec3 pn = nd.p + nd.v * tau + 0.5 * tau * tau * a;
          const std::int64_t cell_n = cell_of(pn);
          if (cell_n < 0 || cell_n == cell_cur) continue;
          /* swept samples at tau/k intervals, endpoint included */
          for (int s = 1; s <= cfg.sweep_samples && ok; ++s) {
            const double ts = tau * s / cfg.sweep_samples;
            ok = grid.free_at(nd.p + nd.v * ts + 0.5 * ts * ts * a);
          }
          if (!ok) continue;

          const double gn = nd.g + (a.squaredNorm() + cfg.rho) * tau;
          const DedupKey k = key_of(cell_n, vn);
          auto it = best.find(k);
          if (it != best.end() && arena[static_cast<std::size_t>(it->second)].g <= gn) continue;
          arena.push_back({pn, vn, gn, top.node, a});
          const int idx = static_cast<int>(arena.size()) - 1;
          best[k] = idx;
          open.push({gn + h_of(pn, vn), gn, static_cast<std::uint64_t>(cell_n), seq++, idx});
        }
  }
  res.status = SearchStatus::NoPath;
  return res;
}

}  // namespace quadplan
