#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "quadplan/kinodyn_astar.hpp"
#include "quadplan/rng.hpp"

using namespace quadplan;

namespace {

/* minimum-effort cost for fixed transfer time: discretize the control on M
 * steps and project onto the two endpoint constraints */
double discrete_min_effort(double dp_minus_v0T, double dv, double T, int M) {
  const double h = T / M;
  double s11 = 0, s12 = 0, s22 = 0, c1 = dv, c2 = dp_minus_v0T;
  std::vector<double> a2(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    const double w = h * (T - (i + 0.5) * h);
    a2[static_cast<std::size_t>(i)] = w;
    s11 += h * h;
    s12 += h * w;
    s22 += w * w;
  }
  const double det = s11 * s22 - s12 * s12;
  const double m1 = (s22 * c1 - s12 * c2) / det;
  const double m2 = (-s12 * c1 + s11 * c2) / det;
  double utu = 0.0;
  for (int i = 0; i < M; ++i) {
    const double u = h * m1 + a2[static_cast<std::size_t>(i)] * m2;
    utu += u * u;
  }
  return h * utu;
}

/* control cost of the cubic transfer, same closed form the planner uses but
 * recomputed from a numeric 2x2 solve and quadrature-free integral */
double control_cost_ref(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1,
                        double T) {
  double j = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double dv = v1[axis] - v0[axis];
    const double D = p1[axis] - p0[axis] - v0[axis] * T;
    /* u = alpha t + beta with alpha T^2/2 + beta T = dv,
     * alpha T^3/6 + beta T^2/2 = D */
    Eigen::Matrix2d A;
    A << T * T / 2, T, T * T * T / 6, T * T / 2;
    const Eigen::Vector2d ab = A.colPivHouseholderQr().solve(Eigen::Vector2d(dv, D));
    const double al = ab[0], be = ab[1];
    j += al * al * T * T * T / 3 + al * be * T * T + be * be * T;
  }
  return j;
}

struct EnumBest {
  double cost = std::numeric_limits<double>::infinity();
  int hits = 0;
};

/* exhaustive search over primitive sequences, mirroring the planner's
 * transition rule: endpoint velocity in bounds, endpoint cell changes and is
 * inside the map, swept samples all free */
void enumerate(const OccupancyGrid& grid, const SearchConfig& cfg, const Vec3& p, const Vec3& v,
               const Vec3& p_goal, double g, int depth, const std::vector<double> (&prim)[3],
               EnumBest& best) {
  if (depth == 0) return;
  const Vec3i cell_cur = grid.pos_to_cell(p);
  for (double ax : prim[0])
    for (double ay : prim[1])
      for (double az : prim[2]) {
        const Vec3 a(ax, ay, az);
        const Vec3 vn = v + a * cfg.tau;
        bool ok = true;
        for (int i = 0; i < 3 && ok; ++i)
          ok = vn[i] >= cfg.vel_min[i] && vn[i] <= cfg.vel_max[i];
        if (!ok) continue;
        const Vec3 pn = p + v * cfg.tau + 0.5 * cfg.tau * cfg.tau * a;
        const Vec3i cell_n = grid.pos_to_cell(pn);
        if (!grid.inside(cell_n) || cell_n == cell_cur) continue;
        for (int s = 1; s <= cfg.sweep_samples && ok; ++s) {
          const double ts = cfg.tau * s / cfg.sweep_samples;
          ok = grid.free_at(p + v * ts + 0.5 * ts * ts * a);
        }
        if (!ok) continue;
        const double gn = g + (a.squaredNorm() + cfg.rho) * cfg.tau;
        if ((pn - p_goal).norm() <= cfg.goal_tolerance) {
          if (gn < best.cost) best.cost = gn;
          ++best.hits;
          continue;  // extensions only add cost
        }
        enumerate(grid, cfg, pn, vn, p_goal, gn, depth - 1, prim, best);
      }
}

}  // namespace

TEST_CASE("segment chain integration and json round-trip") {
  SearchTrajectory t;
  t.p0 = Vec3(1, 0, 2);
  t.v0 = Vec3(0.5, -0.5, 0);
  t.segments = {{Vec3(1, 0, 0), 0.4}, {Vec3(-0.5, 2, 0.25), 0.6}};
  t.cost = 12.75;

  CHECK(t.duration() == doctest::Approx(1.0));
  /* inside the first segment */
  const double t1 = 0.3;
  CHECK((t.position_at(t1) - (t.p0 + t.v0 * t1 + 0.5 * t1 * t1 * Vec3(1, 0, 0))).norm() <
        1e-12);
  CHECK((t.velocity_at(t1) - (t.v0 + t1 * Vec3(1, 0, 0))).norm() < 1e-12);
  /* inside the second */
  const Vec3 p_mid = t.p0 + t.v0 * 0.4 + 0.5 * 0.16 * Vec3(1, 0, 0);
  const Vec3 v_mid = t.v0 + 0.4 * Vec3(1, 0, 0);
  const double t2 = 0.25;
  CHECK((t.position_at(0.4 + t2) - (p_mid + v_mid * t2 + 0.5 * t2 * t2 * t.segments[1].accel))
            .norm() < 1e-12);
  /* past the end it stays at the terminal state */
  CHECK((t.position_at(9.0) - t.position_at(1.0)).norm() < 1e-12);

  const SearchTrajectory r = SearchTrajectory::from_json(t.to_json());
  CHECK(r.p0 == t.p0);
  CHECK(r.v0 == t.v0);
  CHECK(r.cost == t.cost);
  REQUIRE(r.segments.size() == t.segments.size());
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    CHECK(r.segments[i].accel == t.segments[i].accel);
    CHECK(r.segments[i].tau == t.segments[i].tau);
  }
}

TEST_CASE("fixed-time transfer cost equals the projected discrete minimum") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 p0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 p1 = p0 + Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1));
    const Vec3 v0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1));
    const Vec3 v1(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1));
    const double T = rng.uniform(0.5, 4.0);

    const double closed = control_cost_ref(p0, v0, p1, v1, T);
    double disc = 0.0;
    for (int axis = 0; axis < 3; ++axis)
      disc += discrete_min_effort(p1[axis] - p0[axis] - v0[axis] * T, v1[axis] - v0[axis], T,
                                  2000);
    CHECK(closed == doctest::Approx(disc).epsilon(1e-5));
  }
}

TEST_CASE("heuristic minimizes total cost over transfer time") {
  Rng rng(22);
  const double rho = 25.0, t_max = 50.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2));
    const Vec3 p1 = p0 + Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 1));
    const Vec3 v0(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1));
    const Vec3 v1(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if ((p1 - p0).norm() < 0.1) continue;

    /* fine scan over T as the argmin oracle */
    double best_total = std::numeric_limits<double>::infinity(), best_t = 0.0;
    for (double T = 1e-3; T <= 20.0; T += 1e-4) {
      const double tot = control_cost_ref(p0, v0, p1, v1, T) + rho * T;
      if (tot < best_total) {
        best_total = tot;
        best_t = T;
      }
    }
    REQUIRE(best_t < 15.0);  // oracle scan range covers the minimum

    const HeuristicResult h = heuristic_cost(p0, v0, p1, v1, rho, t_max);
    CHECK(h.t_star == doctest::Approx(best_t).epsilon(1e-3));
    CHECK(h.cost + rho * h.t_star == doctest::Approx(best_total).epsilon(1e-6));
    /* returned cost is the control part alone */
    CHECK(h.cost == doctest::Approx(control_cost_ref(p0, v0, p1, v1, h.t_star)).epsilon(1e-9));
  }
}

TEST_CASE("heuristic of identical boundary states is zero") {
  const HeuristicResult h = heuristic_cost(Vec3(1, 2, 3), Vec3(0.5, 0, 0), Vec3(1, 2, 3),
                                           Vec3(0.5, 0, 0), 25.0, 50.0);
  CHECK(h.cost == 0.0);
  CHECK(h.t_star == 0.0);
}

TEST_CASE("search equals exhaustive enumeration on small instances") {
  Rng rng(23);
  SearchConfig cfg;
  cfg.tau = 0.4;
  cfg.n_accel = 1;
  cfg.accel_min = Vec3(-2, -2, -2);
  cfg.accel_max = Vec3(2, 2, 2);
  cfg.vel_min = Vec3(-2, -2, -2);
  cfg.vel_max = Vec3(2, 2, 2);
  cfg.rho = 25.0;
  cfg.goal_tolerance = 0.6;
  cfg.vel_bin = 1e-6;  // effectively exact velocity keys at these magnitudes
  const int depth = 3;

  std::vector<double> prim[3];
  for (int axis = 0; axis < 3; ++axis) prim[axis] = {-2.0, 0.0, 2.0};

  int valid = 0;
  for (int inst = 0; inst < 30 && valid < 20; ++inst) {
    OccupancyGrid grid(0.25, Vec3::Zero(), Vec3i(24, 24, 12));
    const int n_obs = static_cast<int>(rng.next() % 7u);
    for (int i = 0; i < n_obs; ++i)
      grid.set_occupied(Vec3i(static_cast<int>(rng.next() % 24u),
                              static_cast<int>(rng.next() % 24u),
                              static_cast<int>(rng.next() % 12u)));

    const Vec3 start(rng.uniform(1.5, 4.5), rng.uniform(1.5, 4.5), rng.uniform(1.0, 2.0));
    const Vec3 v0(rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), 0.0);
    Vec3 goal = start + Vec3(rng.uniform(0.8, 1.4), rng.uniform(0.2, 0.8), 0.0);
    if (!grid.free_at(start) || !grid.free_at(goal)) continue;
    if ((start - goal).norm() <= cfg.goal_tolerance) continue;

    EnumBest best;
    enumerate(grid, cfg, start, v0, goal, 0.0, depth, prim, best);
    if (!std::isfinite(best.cost)) continue;
    /* any deeper sequence costs at least (depth+1) rho tau */
    if (best.cost >= (depth + 1) * cfg.rho * cfg.tau) continue;
    ++valid;

    const SearchResult res = kinodyn_search(grid, cfg, start, v0, goal, Vec3::Zero());
    REQUIRE(res.status == SearchStatus::Success);
    CHECK(res.trajectory.cost == doctest::Approx(best.cost).epsilon(1e-12));
    CHECK(static_cast<int>(res.trajectory.segments.size()) <= depth);
  }
  CHECK(valid >= 15);
}

TEST_CASE("swept collision checking forces a detour around a thin wall") {
  SearchConfig cfg;
  cfg.goal_tolerance = 0.4;
  OccupancyGrid free_grid(0.1, Vec3::Zero(), Vec3i(60, 40, 20));
  OccupancyGrid walled(0.1, Vec3::Zero(), Vec3i(60, 40, 20));
  /* one-cell-thick wall at x = 3 with a gap near y = 3.5 */
  for (int j = 0; j < 40; ++j)
    for (int k = 0; k < 20; ++k)
      if (j < 32) walled.set_occupied(Vec3i(30, j, k));

  const Vec3 start(1.0, 2.0, 1.0), goal(5.0, 2.0, 1.0);
  const SearchResult open_res = kinodyn_search(free_grid, cfg, start, Vec3::Zero(), goal,
                                               Vec3::Zero());
  const SearchResult wall_res = kinodyn_search(walled, cfg, start, Vec3::Zero(), goal,
                                               Vec3::Zero());
  REQUIRE(open_res.status == SearchStatus::Success);
  REQUIRE(wall_res.status == SearchStatus::Success);
  CHECK(wall_res.trajectory.cost > open_res.trajectory.cost + 1.0);

  /* the returned trajectory clears the wall at a much finer sampling than the
   * sweep used inside the search */
  const double dur = wall_res.trajectory.duration();
  for (int i = 0; i <= 2000; ++i) {
    const Vec3 p = wall_res.trajectory.position_at(dur * i / 2000.0);
    CHECK(walled.free_at(p));
  }
}

TEST_CASE("search is deterministic") {
  SearchConfig cfg;
  OccupancyGrid grid(0.1, Vec3::Zero(), Vec3i(50, 30, 20));
  rasterize_cylinder(grid, 2.5, 1.5, 0.6, 0.0, 2.0);
  const Vec3 start(0.5, 1.5, 1.0), goal(4.5, 1.5, 1.0);
  const SearchResult a = kinodyn_search(grid, cfg, start, Vec3::Zero(), goal, Vec3::Zero());
  const SearchResult b = kinodyn_search(grid, cfg, start, Vec3::Zero(), goal, Vec3::Zero());
  REQUIRE(a.status == SearchStatus::Success);
  REQUIRE(b.status == SearchStatus::Success);
  CHECK(a.expansions == b.expansions);
  CHECK(a.trajectory.to_json() == b.trajectory.to_json());
}

TEST_CASE("occupied endpoints are rejected and trivial instances return empty plans") {
  SearchConfig cfg;
  OccupancyGrid grid(0.1, Vec3::Zero(), Vec3i(20, 20, 10));
  grid.set_occupied(grid.pos_to_cell(Vec3(0.55, 0.55, 0.55)));
  CHECK_THROWS_AS(kinodyn_search(grid, cfg, Vec3(0.55, 0.55, 0.55), Vec3::Zero(),
                                 Vec3(1.5, 1.5, 0.5), Vec3::Zero()),
                  std::invalid_argument);
  CHECK_THROWS_AS(kinodyn_search(grid, cfg, Vec3(1.5, 1.5, 0.5), Vec3::Zero(),
                                 Vec3(0.55, 0.55, 0.55), Vec3::Zero()),
                  std::invalid_argument);

  const SearchResult r = kinodyn_search(grid, cfg, Vec3(1.5, 1.5, 0.5), Vec3::Zero(),
                                        Vec3(1.6, 1.5, 0.5), Vec3::Zero());
  CHECK(r.status == SearchStatus::Success);
  CHECK(r.trajectory.segments.empty());
  CHECK(r.trajectory.cost == 0.0);
}
