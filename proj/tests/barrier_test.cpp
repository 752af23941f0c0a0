#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "quadplan/barrier.hpp"
#include "quadplan/rng.hpp"

using namespace quadplan;

namespace {

/* roots of (t m_hat) on the ellipsoid by bisection, independent of the closed
 * form under test */
double boundary_by_bisection(const Vec3& m, const Vec3& l) {
  const Vec3 u = m.normalized();
  auto f = [&](double t) {
    double s = -1.0;
    for (int i = 0; i < 3; ++i) s += (t * u[i]) * (t * u[i]) / (l[i] * l[i]);
    return s;
  };
  double lo = 0.0, hi = l.maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vec3 sorted_axes(Rng& rng) {
  double a = rng.uniform(0.1, 0.5), b = rng.uniform(0.1, 0.5), c = rng.uniform(0.1, 0.5);
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return Vec3(a, b, c);
}

}  // namespace

TEST_CASE("ellipsoid boundary distance matches bisection on random rays") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 l = sorted_axes(rng);
    const Vec3 m(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (m.norm() < 1e-6) continue;
    CHECK(ellipsoid_boundary_distance(m, l) ==
          doctest::Approx(boundary_by_bisection(m, l)).epsilon(1e-9));
  }
}

TEST_CASE("ellipsoid boundary distance analytic cases") {
  const Vec3 l(0.2, 0.3, 0.6);
  CHECK(ellipsoid_boundary_distance(Vec3(5, 0, 0), l) == doctest::Approx(0.2));
  CHECK(ellipsoid_boundary_distance(Vec3(0, -2, 0), l) == doctest::Approx(0.3));
  CHECK(ellipsoid_boundary_distance(Vec3(0, 0, 0.1), l) == doctest::Approx(0.6));
  /* sphere: every direction returns the radius */
  Rng rng(32);
  for (int i = 0; i < 50; ++i) {
    const Vec3 m(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (m.norm() < 1e-6) continue;
    CHECK(ellipsoid_boundary_distance(m, Vec3(0.4, 0.4, 0.4)) == doctest::Approx(0.4));
  }
  /* degenerate direction falls back to the smallest semi-axis */
  CHECK(ellipsoid_boundary_distance(Vec3::Zero(), l) == doctest::Approx(0.2));
}

TEST_CASE("recursion chain: lengths, linearity, explicit small example") {
  const std::array<double, 3> c = {0.3, 0.5, 0.7};
  const std::vector<double> h = {1.0, 2.0, -0.5, 3.0, 0.25, -1.0};
  const auto chain = hocbf_chain(h, c);
  REQUIRE(chain[0].size() == 5);
  REQUIRE(chain[1].size() == 4);
  REQUIRE(chain[2].size() == 3);
  /* first level by hand: h[k+1] - 0.7 h[k] */
  CHECK(chain[0][0] == doctest::Approx(2.0 - 0.7 * 1.0));
  CHECK(chain[0][1] == doctest::Approx(-0.5 - 0.7 * 2.0));
  /* second level: g[k+1] - 0.5 g[k] */
  CHECK(chain[1][0] == doctest::Approx(chain[0][1] - 0.5 * chain[0][0]));
  CHECK(chain[2][0] == doctest::Approx(chain[1][1] - 0.3 * chain[1][0]));

  /* linearity in the input sequence */
  Rng rng(33);
  std::vector<double> g(h.size()), mix(h.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = rng.uniform(-2, 2);
    mix[i] = 1.5 * h[i] - 0.25 * g[i];
  }
  const auto ch = hocbf_chain(h, c), cg = hocbf_chain(g, c), cm = hocbf_chain(mix, c);
  for (int lvl = 0; lvl < 3; ++lvl)
    for (std::size_t k = 0; k < cm[static_cast<std::size_t>(lvl)].size(); ++k)
      CHECK(cm[static_cast<std::size_t>(lvl)][k] ==
            doctest::Approx(1.5 * ch[static_cast<std::size_t>(lvl)][k] -
                            0.25 * cg[static_cast<std::size_t>(lvl)][k])
                .epsilon(1e-12));

  CHECK_THROWS_AS(hocbf_chain({1.0, 2.0}, c), std::invalid_argument);
  CHECK_THROWS_AS(hocbf_chain(h, {0.3, 1.0, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(hocbf_chain(h, {-0.1, 0.3, 0.3}), std::invalid_argument);
}

TEST_CASE("expansion weights reproduce the chained recursion") {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const std::array<double, 3> c = {rng.uniform(0, 0.99), rng.uniform(0, 0.99),
                                     rng.uniform(0, 0.99)};
    std::vector<double> h(9);
    for (double& v : h) v = rng.uniform(-3, 3);
    const auto chain = hocbf_chain(h, c);
    const auto w = hocbf_expansion_weights(c);
    for (std::size_t k = 0; k < chain[2].size(); ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < 4; ++m) acc += w[m] * h[k + m];
      CHECK(chain[2][k] == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  /* the default rates, expanded by hand: a = c - 1 = -0.7 three times */
  const auto w = hocbf_expansion_weights({0.3, 0.3, 0.3});
  CHECK(w[0] == doctest::Approx(-0.343));
  CHECK(w[1] == doctest::Approx(1.47));
  CHECK(w[2] == doctest::Approx(-2.1));
  CHECK(w[3] == doctest::Approx(1.0));

  /* c = 0 turns the recursion into a third difference, which kills constants */
  const std::vector<double> flat(7, 1.23);
  const auto z = hocbf_chain(flat, {0.0, 0.0, 0.0});
  for (double v : z[2]) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("static barrier offsets the field distance and exposes its gradient") {
  OccupancyGrid grid(0.1, Vec3::Zero(), Vec3i(30, 30, 20));
  rasterize_cylinder(grid, 1.5, 1.5, 0.4, 0.0, 2.0);
  const DistanceField df = DistanceField::build(grid);
  CbfConfig cfg;

  Rng rng(35);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.uniform(0.2, 2.8), rng.uniform(0.2, 2.8), rng.uniform(0.2, 1.8));
    Vec3 g;
    const double h = h_static(p, df, cfg, &g);
    const DistanceSample ds = df.sample(p);
    CHECK(h == doctest::Approx(ds.distance - 0.25 - 0.3).epsilon(1e-12));
    CHECK((g - ds.gradient).norm() == doctest::Approx(0.0));
  }

  /* inside the inflated radius the barrier goes negative */
  CHECK(h_static(Vec3(1.5, 1.5, 1.0), df, cfg) < 0.0);
  CHECK(h_static(Vec3(0.3, 0.3, 1.0), df, cfg) > 0.0);
}

TEST_CASE("dynamic barrier value and gradient") {
  CbfConfig cfg;
  EllipsoidShape sphere;
  sphere.semi_axes = Vec3(0.4, 0.4, 0.4);
  const Vec3 po(1, 2, 0.5);

  /* sphere case has a closed form */
  const Vec3 p(2.5, 2.0, 0.5);
  CHECK(h_dynamic(p, po, sphere, cfg) ==
        doctest::Approx(1.5 - 0.4 - 0.25 - 0.3).epsilon(1e-12));

  /* centered query is the documented worst case */
  CHECK(h_dynamic(po, po, sphere, cfg) == doctest::Approx(-0.4 - 0.25 - 0.3));

  EllipsoidShape ell;
  ell.semi_axes = Vec3(0.2, 0.35, 0.5);
  ell.rotation = Eigen::AngleAxisd(0.6, Vec3(0.3, 1, 0.2).normalized()).toRotationMatrix();
  validate(ell);

  Rng rng(36);
  const double step = 1e-6;
  for (int i = 0; i < 200; ++i) {
    const Vec3 q = po + Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    if ((q - po).norm() < 0.3) continue;
    Vec3 g;
    const double h = h_dynamic(q, po, ell, cfg, &g);
    /* value against the boundary-distance definition */
    const Vec3 m = ell.rotation.transpose() * (q - po);
    CHECK(h == doctest::Approx((q - po).norm() - ellipsoid_boundary_distance(m, ell.semi_axes) -
                               0.55)
                   .epsilon(1e-12));
    /* gradient against finite differences */
    for (int a = 0; a < 3; ++a) {
      Vec3 qp = q, qm = q;
      qp[a] += step;
      qm[a] -= step;
      const double fd = (h_dynamic(qp, po, ell, cfg) - h_dynamic(qm, po, ell, cfg)) / (2 * step);
      CHECK(g[a] == doctest::Approx(fd).epsilon(2e-5));
    }
  }
}

TEST_CASE("residual assembly: row layout in recursion mode") {
  CbfConfig cfg;  // use_cbf = true, c = 0.3
  const int N = 5;
  /* synthetic positions along x past a spherical obstacle at the origin */
  ObstacleSnapshot obs;
  obs.shape.semi_axes = Vec3(0.3, 0.3, 0.3);
  obs.position = Vec3::Zero();
  obs.velocity = Vec3(0.1, 0, 0);
  std::vector<Vec3> pos;
  for (int k = 0; k <= N + 2; ++k) pos.push_back(Vec3(1.0 + 0.2 * k, 0.5, 0));

  /* reference barrier samples with the extrapolated obstacle */
  std::vector<double> h;
  for (int k = 0; k <= N + 2; ++k) {
    const Vec3 po = obs.position + obs.velocity * (0.1 * k);
    h.push_back(h_dynamic(pos[static_cast<std::size_t>(k)], po, obs.shape, cfg));
  }
  const auto chain = hocbf_chain(h, cfg.c);

  const BarrierResiduals r = dynamic_barrier_residuals(pos, N, obs, 0.1, cfg);
  CHECK(r.h0_x0 == doctest::Approx(h[0]).epsilon(1e-12));
  CHECK(r.h3_x0 == doctest::Approx(chain[2][0]).epsilon(1e-12));
  REQUIRE(static_cast<int>(r.rows.size()) == 2 + (N - 1));
  CHECK(r.rows[0] == doctest::Approx(chain[0][0]).epsilon(1e-12));
  CHECK(r.rows[1] == doctest::Approx(chain[1][0]).epsilon(1e-12));
  for (int k = 1; k <= N - 1; ++k)
    CHECK(r.rows[static_cast<std::size_t>(k + 1)] ==
          doctest::Approx(chain[2][static_cast<std::size_t>(k)]).epsilon(1e-12));
  CHECK(r.min_row() == doctest::Approx(*std::min_element(r.rows.begin(), r.rows.end())));

  /* too short a rollout for the padded recursion */
  std::vector<Vec3> short_pos(pos.begin(), pos.begin() + N + 2);
  CHECK_THROWS_AS(dynamic_barrier_residuals(short_pos, N, obs, 0.1, cfg),
                  std::invalid_argument);
}

TEST_CASE("residual assembly: plain distance mode") {
  CbfConfig cfg;
  cfg.use_cbf = false;
  const int N = 4;
  OccupancyGrid grid(0.1, Vec3::Zero(), Vec3i(30, 30, 10));
  rasterize_cylinder(grid, 1.5, 1.5, 0.4, 0.0, 1.0);
  const DistanceField df = DistanceField::build(grid);

  std::vector<Vec3> pos;
  for (int k = 0; k <= N; ++k) pos.push_back(Vec3(0.4 + 0.15 * k, 1.5, 0.5));
  const BarrierResiduals r = static_barrier_residuals(pos, N, df, cfg);
  CHECK(r.h0_x0 == doctest::Approx(h_static(pos[0], df, cfg)).epsilon(1e-12));
  REQUIRE(static_cast<int>(r.rows.size()) == N);
  for (int k = 1; k <= N; ++k)
    CHECK(r.rows[static_cast<std::size_t>(k - 1)] ==
          doctest::Approx(h_static(pos[static_cast<std::size_t>(k)], df, cfg)).epsilon(1e-12));
}

TEST_CASE("initial infeasibility is reported, not hidden") {
  CbfConfig cfg;
  ObstacleSnapshot obs;
  obs.shape.semi_axes = Vec3(0.3, 0.3, 0.3);
  obs.position = Vec3::Zero();
  std::vector<Vec3> pos;
  /* rollout starts inside the inflated obstacle and escapes */
  for (int k = 0; k <= 7; ++k) pos.push_back(Vec3(0.2 + 0.35 * k, 0, 0));
  const BarrierResiduals r = dynamic_barrier_residuals(pos, 5, obs, 0.1, cfg);
  CHECK(r.h0_x0 < 0.0);
}
