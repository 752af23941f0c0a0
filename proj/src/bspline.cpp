#include "quadplan/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace quadplan {

namespace {

struct Basis {
  double b[4];
};

Basis basis_value(double a) {
  const double a2 = a * a, a3 = a2 * a;
  return {{(1.0 - 3.0 * a + 3.0 * a2 - a3) / 6.0, (4.0 - 6.0 * a2 + 3.0 * a3) / 6.0,
           (1.0 + 3.0 * a + 3.0 * a2 - 3.0 * a3) / 6.0, a3 / 6.0}};
}

Basis basis_d1(double a) {
  const double a2 = a * a;
  return {{-0.5 * (1.0 - a) * (1.0 - a), -2.0 * a + 1.5 * a2, 0.5 + a - 1.5 * a2, 0.5 * a2}};
}

Basis basis_d2(double a) {
  return {{1.0 - a, -2.0 + 3.0 * a, 1.0 - 3.0 * a, a}};
}

}  // namespace

BsplineTrajectory::BsplineTrajectory(std::vector<Vec3> control_points, double knot_dt,
                                     double t_start)
    : pts_(std::move(control_points)), knot_dt_(knot_dt), t_start_(t_start) {
  if (pts_.size() < 6) throw std::invalid_argument("bspline: need at least 6 control points");
  if (knot_dt_ <= 0.0) throw std::invalid_argument("bspline: knot spacing must be positive");
}

BsplineTrajectory::Eval BsplineTrajectory::eval(double t) const {
  Eval e;
  const int spans = span_count();
  double u = (t - t_start_) / knot_dt_;
  e.clamped = (u < 0.0) || (u > static_cast<double>(spans));
  u = std::clamp(u, 0.0, static_cast<double>(spans));
  int span = std::min(static_cast<int>(std::floor(u)), spans - 1);
  const double a = u - span;
  const Vec3* P = &pts_[static_cast<std::size_t>(span)];
  const Basis b0 = basis_value(a), b1 = basis_d1(a), b2 = basis_d2(a);
  for (int i = 0; i < 4; ++i) {
    e.position += b0.b[i] * P[i];
    e.velocity += b1.b[i] * P[i];
    e.acceleration += b2.b[i] * P[i];
  }
  e.velocity /= knot_dt_;
  e.acceleration /= knot_dt_ * knot_dt_;
  return e;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 28);
}

}  // namespace

double BsplineTrajectory::arc_length_at(double t, double tol) const {
  const double te = std::min(t, t_end());
  auto speed = [this](double tt) { return eval(tt).velocity.norm(); };
  double total = 0.0;
  double a = t_start();
  for (int s = 0; s < span_count() && a < te; ++s) {
    double b = std::min(t_start() + (s + 1) * knot_dt_, te);
    total += integrate(speed, a, b, tol);
    a = b;
  }
  return total;
}

double smoothness_cost(const std::vector<Vec3>& pts, std::vector<Vec3>* grad) {
  const int nb = static_cast<int>(pts.size()) - 1;
  if (grad) grad->assign(pts.size(), Vec3::Zero());
  double cost = 0.0;
  for (int i = 3; i <= nb; ++i) {
    const Vec3 d = pts[i - 3] - 2.0 * pts[i - 2] + pts[i - 1];
    const double n = d.norm();
    cost += n;
    if (grad && n > 0.0) {
      const Vec3 dn = d / n;
      (*grad)[i - 3] += dn;
      (*grad)[i - 2] -= 2.0 * dn;
      (*grad)[i - 1] += dn;
    }
  }
  return cost;
}

double uniformity_cost(const std::vector<Vec3>& pts, std::vector<Vec3>* grad, double eps) {
  const int nb = static_cast<int>(pts.size()) - 1;
  if (grad) grad->assign(pts.size(), Vec3::Zero());
  double cost = 0.0;
  for (int i = 3; i <= nb - 1; ++i) {
    const Vec3 ca = pts[i - 1] - pts[i - 3];
    const Vec3 cb = pts[i] - pts[i - 2];
    const double na = ca.norm(), nb2 = cb.norm();
    const double x = na - nb2;
    double dabs;  // d|x|/dx
    if (eps > 0.0) {
      const double r = std::sqrt(x * x + eps * eps);
      cost += r - eps;
      dabs = x / r;
    } else {
      cost += std::abs(x);
      dabs = (x > 0.0) - (x < 0.0);
    }
    if (grad) {
      if (na > 0.0) {
        const Vec3 ua = ca / na * dabs;
        (*grad)[i - 1] += ua;
        (*grad)[i - 3] -= ua;
      }
      if (nb2 > 0.0) {
        const Vec3 ub = cb / nb2 * dabs;
        (*grad)[i] -= ub;
        (*grad)[i - 2] += ub;
      }
    }
  }
  return cost;
}

BsplineTrajectory fit_bspline(const std::function<Vec3(double)>& path, double duration,
                              int n_points) {
  if (n_points < 6) throw std::invalid_argument("fit_bspline: need at least 6 control points");
  const int n = n_points;
  if (duration <= 1e-9) {
    std::vector<Vec3> pts(static_cast<std::size_t>(n), path(0.0));
    return BsplineTrajectory(std::move(pts), 1e-6, 0.0);
  }
  const int spans = n - 3;
  const double dt = duration / spans;

  /* Oversample well past one sample per span: with samples ~= control points
   * the collocation matrix can turn near-singular and the end control points
   * fly off by meters. The ridge on second differences pins what little null
   * space is left without biasing fits whose control polygon is straight. */
  const int m = 4 * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, 3);
  for (int j = 0; j < m; ++j) {
    const double tt = duration * j / (m - 1);
    double u = std::clamp(tt / dt, 0.0, static_cast<double>(spans));
    int span = std::min(static_cast<int>(std::floor(u)), spans - 1);
    const Basis b = basis_value(u - span);
    for (int i = 0; i < 4; ++i) A(j, span + i) = b.b[i];
    B.row(j) = path(tt).transpose();
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n - 2, n);
  for (int i = 0; i < n - 2; ++i) {
    R(i, i) = 1.0;
    R(i, i + 1) = -2.0;
    R(i, i + 2) = 1.0;
  }
  const double ridge = 1e-6 * m;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, n);
  C(0, 0) = 1.0 / 6.0;
  C(0, 1) = 4.0 / 6.0;
  C(0, 2) = 1.0 / 6.0;
  C(1, n - 3) = 1.0 / 6.0;
  C(1, n - 2) = 4.0 / 6.0;
  C(1, n - 1) = 1.0 / 6.0;
  Eigen::MatrixXd D(2, 3);
  D.row(0) = path(0.0).transpose();
  D.row(1) = path(duration).transpose();

  /* equality-constrained least squares via the KKT system, shared across axes */
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 2, n + 2);
  K.topLeftCorner(n, n) = 2.0 * (A.transpose() * A + ridge * R.transpose() * R);
  K.topRightCorner(n, 2) = C.transpose();
  K.bottomLeftCorner(2, n) = C;
  Eigen::MatrixXd rhs(n + 2, 3);
  rhs.topRows(n) = 2.0 * A.transpose() * B;
  rhs.bottomRows(2) = D;
  Eigen::MatrixXd sol = K.fullPivLu().solve(rhs);

  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = sol.row(i).transpose();
  return BsplineTrajectory(std::move(pts), dt, 0.0);
}

namespace {

struct SplineObjective {
  const DistanceField* df;
  const SplineOptimizeConfig* cfg;
  std::vector<Vec3> pts;  // working copy, fixed ends stay put
  int free_lo, free_hi;   // inclusive control-point index range

  int dim() const { return 3 * (free_hi - free_lo + 1); }

  void scatter(const Eigen::VectorXd& x) {
    for (int i = free_lo; i <= free_hi; ++i)
      pts[static_cast<std::size_t>(i)] = x.segment<3>(3 * (i - free_lo));
  }

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    scatter(x);
    std::vector<Vec3> gs, gu;
    double cost = cfg->w_smooth * smoothness_cost(pts, grad ? &gs : nullptr);
    cost += cfg->w_uniform * uniformity_cost(pts, grad ? &gu : nullptr, cfg->abs_eps);
    if (grad) {
      grad->setZero(dim());
      for (int i = free_lo; i <= free_hi; ++i)
        grad->segment<3>(3 * (i - free_lo)) =
            cfg->w_smooth * gs[static_cast<std::size_t>(i)] +
            cfg->w_uniform * gu[static_cast<std::size_t>(i)];
    }
    for (int i = free_lo; i <= free_hi; ++i) {
      const DistanceSample ds = df->sample(pts[static_cast<std::size_t>(i)]);
      const double pen = cfg->d_threshold - ds.distance;
      if (pen > 0.0) {
        cost += cfg->w_clear * pen * pen;
        if (grad)
          grad->segment<3>(3 * (i - free_lo)) -= cfg->w_clear * 2.0 * pen * ds.gradient;
      }
    }
    return cost;
  }
};

}  // namespace

BsplineTrajectory optimize_bspline(const BsplineTrajectory& init, const DistanceField& df,
                                   const SplineOptimizeConfig& cfg) {
  const int nb = static_cast<int>(init.control_points().size()) - 1;
  const int free_lo = 3, free_hi = nb - 3;
  if (free_hi < free_lo) return init;

  SplineObjective obj{&df, &cfg, init.control_points(), free_lo, free_hi};
  const int n = obj.dim();
  Eigen::VectorXd x(n);
  for (int i = free_lo; i <= free_hi; ++i)
    x.segment<3>(3 * (i - free_lo)) = init.control_points()[static_cast<std::size_t>(i)];

  Eigen::VectorXd g(n), gn(n);
  double f = obj.eval(x, &g);

  constexpr int kHistory = 8;
  std::vector<Eigen::VectorXd> ss, ys;
  std::vector<double> rho;

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) break;

    /* two-loop recursion */
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(ss.size());
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] = rho[static_cast<std::size_t>(i)] *
                                           ss[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(i)];
    }
    double gamma = 1.0;
    if (m > 0) {
      const auto& s = ss.back();
      const auto& y = ys.back();
      gamma = s.dot(y) / y.dot(y);
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho[static_cast<std::size_t>(i)] *
                          ys[static_cast<std::size_t>(i)].dot(q);
      q += (alpha[static_cast<std::size_t>(i)] - beta) * ss[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (slope >= 0.0) {  // not a descent direction, fall back to steepest
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      fn = obj.eval(x + step * d, nullptr);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd xn = x + step * d;
    obj.eval(xn, &gn);
    Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      if (static_cast<int>(ss.size()) == kHistory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
        rho.erase(rho.begin());
      }
      ss.push_back(s);
      ys.push_back(y);
      rho.push_back(1.0 / sy);
    }
    x = xn;
    f = fn;
    g = gn;
  }

  obj.scatter(x);
  return BsplineTrajectory(obj.pts, init.knot_dt(), init.t_start());
}

RefTrajectory RefTrajectory::build(const BsplineTrajectory& spline, double quad_tol) {
  RefTrajectory r;
  r.spline_ = spline;
  r.length_ = spline.total_arc_length(quad_tol);
  return r;
}

RefTrajectory::Ref RefTrajectory::lookup(double theta) const {
  Ref out;
  if (length_ < 1e-12) {
    out.position = spline_.eval(spline_.t_start()).position;
    return out;
  }
  const double span = spline_.t_end() - spline_.t_start();
  const double th = std::clamp(theta, 0.0, length_);
  const double t = spline_.t_start() + th / length_ * span;
  const auto e = spline_.eval(t);
  const double dt_dtheta = span / length_;
  out.position = e.position;
  out.tangent = e.velocity * dt_dtheta;
  out.dtangent = e.acceleration * dt_dtheta * dt_dtheta;
  return out;
}

double RefTrajectory::uniformity_residual(int samples) const {
  if (length_ < 1e-12) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double theta = length_ * i / (samples - 1);
    worst = std::max(worst, std::abs(lookup(theta).tangent.norm() - 1.0));
  }
  return worst;
}

std::string RefTrajectory::to_csv(double dtheta) const {
  std::string out = "theta,x,y,z,tx,ty,tz\n";
  char line[256];
  const int rows = (length_ < 1e-12) ? 1 : static_cast<int>(std::ceil(length_ / dtheta)) + 1;
  for (int i = 0; i < rows; ++i) {
    const double theta = std::min(i * dtheta, length_);
    const Ref r = lookup(theta);
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", theta,
                  r.position.x(), r.position.y(), r.position.z(), r.tangent.x(), r.tangent.y(),
                  r.tangent.z());
    out += line;
  }
  return out;
}

}  // namespace quadplan
