#include "quadplan/mpcc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace quadplan {

std::pair<Vec3, Vec3> lag_contour_errors(const Vec3& p, const RefTrajectory::Ref& ref) {
  const Vec3 e = p - ref.position;
  const Vec3 el = ref.tangent.dot(e) * ref.tangent;
  return {el, e - el};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/* quaternion stored (w, x, y, z), kept unit-norm along the rollout */
Vec3 rot_e3(const Vec4& q) {
  return Vec3(2.0 * (q[1] * q[3] + q[0] * q[2]), 2.0 * (q[2] * q[3] - q[0] * q[1]),
              1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]));
}

Mat34 rot_e3_jac(const Vec4& q) {
  Mat34 j;
  j.col(0) = Vec3(2.0 * q[2], -2.0 * q[1], 0.0);
  j.col(1) = Vec3(2.0 * q[3], -2.0 * q[0], -4.0 * q[1]);
  j.col(2) = Vec3(2.0 * q[0], 2.0 * q[3], -4.0 * q[2]);
  j.col(3) = Vec3(2.0 * q[1], 2.0 * q[2], 0.0);
  return j;
}

/* right-multiplication matrix: (Mr(w) q) = q (x) (0, w) on (w,x,y,z) coeffs */
Mat4 omega_right(const Vec3& w) {
  Mat4 m;
  m << 0.0, -w.x(), -w.y(), -w.z(),  //
      w.x(), 0.0, w.z(), -w.y(),     //
      w.y(), -w.z(), 0.0, w.x(),     //
      w.z(), w.y(), -w.x(), 0.0;
  return m;
}

struct Stage {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec4 q = Vec4(1, 0, 0, 0);
  double T = 0.0;
};

struct Rollout {
  std::vector<Stage> x;          // stages 0..M
  std::vector<double> zeta_eff;  // effective thrust rate per step
  std::vector<bool> sat_T;
};

struct ProgRollout {
  std::vector<double> theta, v;  // stages 0..N
  std::vector<double> dv_eff;    // per step
  std::vector<bool> sat;
};

struct RowCoeff {
  int stage;
  double w;
};

/* Weights of the level-i recursion as a combination of raw barrier samples.
 * A row whose samples all sit before stage 3 cannot be moved by any input
 * (relative degree three); such rows are reported but not penalized. */
std::vector<std::vector<RowCoeff>> row_stencils(const CbfConfig& cbf, int N) {
  std::vector<std::vector<RowCoeff>> rows;
  if (!cbf.use_cbf) {
    for (int k = 1; k <= N; ++k) rows.push_back({{k, 1.0}});
    return rows;
  }
  std::vector<double> w1 = {cbf.c[0] - 1.0, 1.0};
  auto lift = [](const std::vector<double>& w, double a) {
    std::vector<double> out(w.size() + 1, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      out[i + 1] += w[i];      // shifted term
      out[i] += a * w[i];      // (c-1) term
    }
    return out;
  };
  std::vector<double> w2 = lift(w1, cbf.c[1] - 1.0);
  std::vector<double> w3 = lift(w2, cbf.c[2] - 1.0);
  auto at = [](const std::vector<double>& w, int base) {
    std::vector<RowCoeff> r;
    for (std::size_t i = 0; i < w.size(); ++i)
      r.push_back({base + static_cast<int>(i), w[i]});
    return r;
  };
  rows.push_back(at(w1, 0));  // h1(x0)
  rows.push_back(at(w2, 0));  // h2(x0)
  for (int k = 1; k <= N - 1; ++k) rows.push_back(at(w3, k));
  return rows;
}

struct Workspace {
  const MpccProblem* pb;
  int N;
  double dt;
  int n;  // 5N decision variables
  Eigen::VectorXd lb, ub;
  double L;
  int n_sources, rows_per_source, n_rows;
  std::vector<std::vector<RowCoeff>> stencils;  // one per row of each source
  std::vector<char> actionable;                 // stencil reaches stage >= 3

  explicit Workspace(const MpccProblem& prob) : pb(&prob) {
    const MpccConfig& c = prob.cfg;
    N = c.horizon;
    dt = c.stage_dt;
    if (N < 3) throw std::invalid_argument("mpcc: horizon must be at least 3");
    if (dt <= 0.0) throw std::invalid_argument("mpcc: stage_dt must be positive");
    if (!prob.ref) throw std::invalid_argument("mpcc: reference required");
    if (!(c.dv_min <= 0.0 && 0.0 <= c.dv_max))
      throw std::invalid_argument("mpcc: dv box must contain zero");
    if (!(prob.quad.thrust_rate_min <= 0.0 && 0.0 <= prob.quad.thrust_rate_max))
      throw std::invalid_argument("mpcc: thrust-rate box must contain zero");
    L = prob.ref->total_length();
    n = 5 * N;
    lb.resize(n);
    ub.resize(n);
    for (int k = 0; k < N; ++k) {
      lb[4 * k] = prob.quad.thrust_rate_min;
      ub[4 * k] = prob.quad.thrust_rate_max;
      lb.segment<3>(4 * k + 1) = prob.quad.omega_min;
      ub.segment<3>(4 * k + 1) = prob.quad.omega_max;
      lb[4 * N + k] = prob.terminal ? 0.0 : c.dv_min;
      ub[4 * N + k] = prob.terminal ? 0.0 : c.dv_max;
    }
    n_sources = (prob.df ? 1 : 0) + static_cast<int>(prob.obstacles.size());
    rows_per_source = prob.cbf.use_cbf ? (2 + (N - 1)) : N;
    n_rows = n_sources * rows_per_source;
    stencils = row_stencils(prob.cbf, N);
    actionable.resize(stencils.size());
    for (std::size_t i = 0; i < stencils.size(); ++i) {
      int last = 0;
      for (const RowCoeff& rc : stencils[i]) last = std::max(last, rc.stage);
      actionable[i] = last >= 3;
    }
  }

  Vec4 input(const Eigen::VectorXd& z, int k) const { return z.segment<4>(4 * k); }
  double dv(const Eigen::VectorXd& z, int k) const { return z[4 * N + k]; }

  Rollout roll(const Eigen::VectorXd& z, int stages, bool with_sigma0) const {
    Rollout r;
    r.x.resize(static_cast<std::size_t>(stages) + 1);
    r.zeta_eff.resize(static_cast<std::size_t>(stages));
    r.sat_T.resize(static_cast<std::size_t>(stages));
    Stage s;
    s.p = pb->x0.s.p;
    s.v = pb->x0.s.v;
    s.q = Vec4(pb->x0.s.q.w(), pb->x0.s.q.x(), pb->x0.s.q.y(), pb->x0.s.q.z());
    s.T = pb->x0.thrust;
    r.x[0] = s;
    for (int k = 0; k < stages; ++k) {
      const Vec4 u = input(z, std::min(k, N - 1));  // trailing stages reuse the last input
      const Vec3 sigma = (k == 0 && with_sigma0) ? pb->sigma0 : Vec3::Zero();
      Stage nx;
      nx.p = s.p + s.v * dt;
      nx.v = s.v + (rot_e3(s.q) * (s.T / pb->quad.mass) + pb->quad.gravity + sigma) * dt;
      Vec4 qt = s.q + 0.5 * dt * (omega_right(u.tail<3>()) * s.q);
      nx.q = qt / qt.norm();
      const double t_raw = s.T + u[0] * dt;
      const double t_cl = std::clamp(t_raw, pb->quad.thrust_min, pb->quad.thrust_max);
      r.sat_T[static_cast<std::size_t>(k)] = (t_cl != t_raw);
      r.zeta_eff[static_cast<std::size_t>(k)] = (t_cl - s.T) / dt;
      nx.T = t_cl;
      r.x[static_cast<std::size_t>(k) + 1] = nx;
      s = nx;
    }
    return r;
  }

  ProgRollout roll_progress(const Eigen::VectorXd& z) const {
    ProgRollout r;
    r.theta.resize(static_cast<std::size_t>(N) + 1);
    r.v.resize(static_cast<std::size_t>(N) + 1);
    r.dv_eff.resize(static_cast<std::size_t>(N));
    r.sat.resize(static_cast<std::size_t>(N));
    if (pb->terminal) {
      const double th = std::clamp(pb->prog0.theta, 0.0, L);
      std::fill(r.theta.begin(), r.theta.end(), th);
      std::fill(r.v.begin(), r.v.end(), 0.0);
      std::fill(r.dv_eff.begin(), r.dv_eff.end(), 0.0);
      std::fill(r.sat.begin(), r.sat.end(), true);
      return r;
    }
    r.theta[0] = pb->prog0.theta;
    r.v[0] = pb->prog0.v_theta;
    for (int k = 0; k < N; ++k) {
      const double v_raw = r.v[static_cast<std::size_t>(k)] + dv(z, k) * dt;
      const double v_cl = std::clamp(v_raw, 0.0, pb->cfg.v_theta_max);
      r.sat[static_cast<std::size_t>(k)] = (v_cl != v_raw);
      const double dve = (v_cl - r.v[static_cast<std::size_t>(k)]) / dt;
      r.dv_eff[static_cast<std::size_t>(k)] = dve;
      r.theta[static_cast<std::size_t>(k) + 1] =
          r.theta[static_cast<std::size_t>(k)] + r.v[static_cast<std::size_t>(k)] * dt +
          0.5 * dve * dt * dt;
      r.v[static_cast<std::size_t>(k) + 1] = v_cl;
    }
    return r;
  }

  /* pull cost seeds on states (and thrust) back to input gradients */
  void adjoint(const Rollout& r, const Eigen::VectorXd& z, const std::vector<Vec3>& sp,
               const std::vector<double>* sT, Eigen::VectorXd& grad) const {
    const int stages = static_cast<int>(r.x.size()) - 1;
    Vec3 lp = Vec3::Zero(), lv = Vec3::Zero();
    Vec4 lq = Vec4::Zero();
    double lT = 0.0;
    lp = sp[static_cast<std::size_t>(stages)];
    if (sT) lT = (*sT)[static_cast<std::size_t>(stages)];
    for (int k = stages - 1; k >= 0; --k) {
      const Stage& s = r.x[static_cast<std::size_t>(k)];
      const int iu = std::min(k, N - 1);
      const Vec4 u = input(z, iu);
      const Vec3 w = u.tail<3>();
      const bool sat = r.sat_T[static_cast<std::size_t>(k)];

      /* q' = qt/|qt|, qt = (I + dt/2 Mr(w)) q */
      const Mat4 mr = omega_right(w);
      const Vec4 qt = s.q + 0.5 * dt * (mr * s.q);
      const double nq = qt.norm();
      const Vec4 qn = qt / nq;
      const Vec4 lqt = (lq - qn * qn.dot(lq)) / nq;

      /* input gradients at this step */
      grad[4 * iu] += (sat ? 0.0 : dt) * lT;
      const Vec4 dq_dox(-s.q[1], s.q[0], s.q[3], -s.q[2]);
      const Vec4 dq_doy(-s.q[2], -s.q[3], s.q[0], s.q[1]);
      const Vec4 dq_doz(-s.q[3], s.q[2], -s.q[1], s.q[0]);
      grad[4 * iu + 1] += 0.5 * dt * dq_dox.dot(lqt);
      grad[4 * iu + 2] += 0.5 * dt * dq_doy.dot(lqt);
      grad[4 * iu + 3] += 0.5 * dt * dq_doz.dot(lqt);

      /* pull to stage k */
      Vec3 lp_k = lp;
      Vec3 lv_k = lp * dt + lv;
      Vec4 lq_k = (dt * s.T / pb->quad.mass) * (rot_e3_jac(s.q).transpose() * lv);
      lq_k += (Mat4::Identity() + 0.5 * dt * mr).transpose() * lqt;
      double lT_k = (dt / pb->quad.mass) * rot_e3(s.q).dot(lv) + (sat ? 0.0 : 1.0) * lT;

      if (k >= 1) {
        lp_k += sp[static_cast<std::size_t>(k)];
        if (sT) lT_k += (*sT)[static_cast<std::size_t>(k)];
      }
      lp = lp_k;
      lv = lv_k;
      lq = lq_k;
      lT = lT_k;
    }
  }
};

struct EvalOut {
  double F = 0.0;
  double phi = 0.0;
  Eigen::VectorXd rows;
  double viol = 0.0;
  double min_row = kInf;
  bool feasible0 = true;
  double h3_x0_min = kInf;
};

/* objective + augmented-Lagrangian penalty, with optional analytic gradient */
EvalOut evaluate(const Workspace& w, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                 double rho, bool with_constraints, Eigen::VectorXd* grad) {
  const MpccProblem& pb = *w.pb;
  const MpccWeights& wt = pb.cfg.weights;
  const int N = w.N;
  const double dt = w.dt;
  EvalOut out;
  if (grad) grad->setZero(w.n);

  const Rollout track = w.roll(z, N, true);
  const ProgRollout prog = w.roll_progress(z);

  std::vector<Vec3> sp_t(static_cast<std::size_t>(N) + 1, Vec3::Zero());
  std::vector<double> sT(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> stheta(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> sv(static_cast<std::size_t>(N) + 1, 0.0);

  /* contour/lag tracking terms, stages 0..N */
  for (int k = 0; k <= N; ++k) {
    const double th = prog.theta[static_cast<std::size_t>(k)];
    const RefTrajectory::Ref ref = pb.ref->lookup(th);
    const Vec3 e = track.x[static_cast<std::size_t>(k)].p - ref.position;
    const Vec3 t = ref.tangent;
    const double a = t.dot(e);
    const double t2 = t.squaredNorm();
    out.F += wt.q_l * a * a * t2 + wt.q_c * (e.squaredNorm() - a * a * (2.0 - t2));
    if (grad) {
      const Vec3 dE_de =
          2.0 * wt.q_l * a * t2 * t + wt.q_c * (2.0 * e - 2.0 * a * (2.0 - t2) * t);
      const Vec3 dE_dt = wt.q_l * (2.0 * a * t2 * e + 2.0 * a * a * t) +
                         wt.q_c * (-2.0 * a * (2.0 - t2) * e + 2.0 * a * a * t);
      sp_t[static_cast<std::size_t>(k)] += dE_de;
      const bool th_clamped = (th < 0.0) || (th > w.L) || pb.terminal;
      if (!th_clamped)
        stheta[static_cast<std::size_t>(k)] += dE_de.dot(-t) + dE_dt.dot(ref.dtangent);
    }
  }

  /* input effort, input rate, progress terms */
  std::vector<Vec4> ueff(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    ueff[static_cast<std::size_t>(k)][0] = track.zeta_eff[static_cast<std::size_t>(k)];
    ueff[static_cast<std::size_t>(k)].tail<3>() = w.input(z, k).tail<3>();
  }
  auto ueff_prev = [&](int k) -> Vec4 {
    return k == 0 ? pb.u_prev : ueff[static_cast<std::size_t>(k) - 1];
  };
  for (int k = 0; k < N; ++k) {
    const Vec4& u = ueff[static_cast<std::size_t>(k)];
    const Vec4 du = u - ueff_prev(k);
    const double dve = prog.dv_eff[static_cast<std::size_t>(k)];
    out.F += u.dot(wt.q_u.cwiseProduct(u)) + du.dot(wt.r_du.cwiseProduct(du)) +
             wt.r_dv * dve * dve - wt.mu * prog.v[static_cast<std::size_t>(k)];
  }
  if (grad) {
    auto add_zeta_eff = [&](int k, double coeff) {
      if (track.sat_T[static_cast<std::size_t>(k)]) {
        if (k >= 1) sT[static_cast<std::size_t>(k)] += -coeff / dt;
      } else {
        (*grad)[4 * k] += coeff;
      }
    };
    auto add_dv_eff = [&](int k, double coeff) {
      if (prog.sat[static_cast<std::size_t>(k)]) {
        sv[static_cast<std::size_t>(k)] += -coeff / dt;
      } else {
        (*grad)[4 * N + k] += coeff;
      }
    };
    for (int k = 0; k < N; ++k) {
      const Vec4& u = ueff[static_cast<std::size_t>(k)];
      Vec4 du_dueff = 2.0 * wt.q_u.cwiseProduct(u);
      du_dueff += 2.0 * wt.r_du.cwiseProduct(u - ueff_prev(k));
      if (k + 1 < N)
        du_dueff -= 2.0 * wt.r_du.cwiseProduct(ueff[static_cast<std::size_t>(k) + 1] - u);
      add_zeta_eff(k, du_dueff[0]);
      (*grad).segment<3>(4 * k + 1) += du_dueff.tail<3>();
      if (!pb.terminal) {
        add_dv_eff(k, 2.0 * wt.r_dv * prog.dv_eff[static_cast<std::size_t>(k)]);
        sv[static_cast<std::size_t>(k)] += -wt.mu;
      }
    }
  }

  out.phi = out.F;

  /* barrier rows on the disturbance-free rollout, two padded stages */
  if (with_constraints && w.n_rows > 0) {
    const Rollout safe = w.roll(z, N + 2, false);
    std::vector<Vec3> sp_c(static_cast<std::size_t>(N) + 3, Vec3::Zero());
    out.rows.resize(w.n_rows);
    int row_idx = 0;
    bool any_grad_seed = false;

    auto process_source = [&](auto&& h_of) {
      const int nh = pb.cbf.use_cbf ? N + 3 : N + 1;
      std::vector<double> h(static_cast<std::size_t>(nh));
      std::vector<Vec3> gh(static_cast<std::size_t>(nh));
      for (int k = 0; k < nh; ++k)
        h[static_cast<std::size_t>(k)] =
            h_of(safe.x[static_cast<std::size_t>(k)].p, k, &gh[static_cast<std::size_t>(k)]);
      out.feasible0 = out.feasible0 && (h[0] >= 0.0);
      if (pb.cbf.use_cbf) {
        const auto w3 = hocbf_expansion_weights(pb.cbf.c);
        double h3x0 = 0.0;
        for (int m = 0; m < 4; ++m) h3x0 += w3[static_cast<std::size_t>(m)] * h[static_cast<std::size_t>(m)];
        out.h3_x0_min = std::min(out.h3_x0_min, h3x0);
      }
      for (std::size_t si = 0; si < w.stencils.size(); ++si) {
        const auto& st = w.stencils[si];
        double val = 0.0;
        for (const RowCoeff& rc : st) val += rc.w * h[static_cast<std::size_t>(rc.stage)];
        out.rows[row_idx] = val;
        out.min_row = std::min(out.min_row, val);
        if (!w.actionable[si]) {
          ++row_idx;  // determined by the current state, nothing to optimize
          continue;
        }
        if (val < 0.0) out.viol = std::max(out.viol, -val);
        const double lam = lambda.size() ? lambda[row_idx] : 0.0;
        const double t = lam - rho * val;
        if (t > 0.0) {
          out.phi += (t * t - lam * lam) / (2.0 * rho);
          if (grad) {
            for (const RowCoeff& rc : st)
              if (rc.stage >= 1)
                sp_c[static_cast<std::size_t>(rc.stage)] +=
                    (-t) * rc.w * gh[static_cast<std::size_t>(rc.stage)];
            any_grad_seed = true;
          }
        } else {
          out.phi += -lam * lam / (2.0 * rho);
        }
        ++row_idx;
      }
    };

    if (pb.df) {
      process_source([&](const Vec3& p, int, Vec3* g) { return h_static(p, *pb.df, pb.cbf, g); });
    }
    for (const ObstacleSnapshot& obs : pb.obstacles) {
      process_source([&](const Vec3& p, int k, Vec3* g) {
        const Vec3 po = obs.position + obs.velocity * (dt * k);
        return h_dynamic(p, po, obs.shape, pb.cbf, g);
      });
    }
    if (grad && any_grad_seed) w.adjoint(safe, z, sp_c, nullptr, *grad);
  }

  if (grad) {
    w.adjoint(track, z, sp_t, &sT, *grad);
    if (!pb.terminal) {
      double ltheta = stheta[static_cast<std::size_t>(N)];
      double lv = sv[static_cast<std::size_t>(N)];
      for (int k = N - 1; k >= 0; --k) {
        const bool sat = prog.sat[static_cast<std::size_t>(k)];
        if (!sat) (*grad)[4 * N + k] += ltheta * 0.5 * dt * dt + lv * dt;
        const double lv_k = ltheta * (sat ? 0.5 * dt : dt) + (sat ? 0.0 : lv) +
                            sv[static_cast<std::size_t>(k)];
        ltheta += stheta[static_cast<std::size_t>(k)];
        lv = lv_k;
      }
    }
  }
  return out;
}

/* min 0.5 d'Bd + g'd over lo <= d <= hi (0 inside the box): conjugate
 * directions on the free set, steps clipped at the first bound they hit */
Eigen::VectorXd solve_box_qp(const Eigen::MatrixXd& B, const Eigen::VectorXd& g,
                             const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const int n = static_cast<int>(g.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    if (hi[i] - lo[i] < 1e-15) fixed[static_cast<std::size_t>(i)] = 1;

  auto mask = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < n; ++i)
      if (fixed[static_cast<std::size_t>(i)]) v[i] = 0.0;
  };

  for (int cycle = 0; cycle < 3; ++cycle) {
    /* free bound variables whose model gradient points back inside */
    Eigen::VectorXd gm = B * d + g;
    for (int i = 0; i < n; ++i) {
      if (!fixed[static_cast<std::size_t>(i)] || hi[i] - lo[i] < 1e-15) continue;
      const bool at_lo = d[i] <= lo[i] + 1e-14, at_hi = d[i] >= hi[i] - 1e-14;
      if ((at_lo && gm[i] < -1e-12) || (at_hi && gm[i] > 1e-12) || (!at_lo && !at_hi))
        fixed[static_cast<std::size_t>(i)] = 0;
    }
    Eigen::VectorXd r = B * d + g;
    mask(r);
    Eigen::VectorXd p = -r;
    double rs = r.squaredNorm();
    int steps = 0;
    while (rs > 1e-18 && steps++ < 2 * n) {
      Eigen::VectorXd Bp = B * p;
      mask(Bp);
      const double pBp = p.dot(Bp);
      double alpha = (pBp > 1e-18) ? rs / pBp : kInf;
      double amax = kInf;
      for (int i = 0; i < n; ++i) {
        if (fixed[static_cast<std::size_t>(i)]) continue;
        if (p[i] > 1e-16)
          amax = std::min(amax, (hi[i] - d[i]) / p[i]);
        else if (p[i] < -1e-16)
          amax = std::min(amax, (lo[i] - d[i]) / p[i]);
      }
      if (alpha >= amax) {
        if (!std::isfinite(amax)) break;
        d += amax * p;
        for (int i = 0; i < n; ++i) {
          if (fixed[static_cast<std::size_t>(i)]) continue;
          if (d[i] >= hi[i] - 1e-12) {
            d[i] = hi[i];
            fixed[static_cast<std::size_t>(i)] = 1;
          } else if (d[i] <= lo[i] + 1e-12) {
            d[i] = lo[i];
            fixed[static_cast<std::size_t>(i)] = 1;
          }
        }
        r = B * d + g;
        mask(r);
        p = -r;
        rs = r.squaredNorm();
        continue;
      }
      d += alpha * p;
      Eigen::VectorXd rn = r + alpha * Bp;
      mask(rn);
      const double rsn = rn.squaredNorm();
      if (rsn < 1e-18) {
        rs = rsn;
        break;
      }
      p = -rn + (rsn / rs) * p;
      r = rn;
      rs = rsn;
    }
  }
  return d.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

double mpcc_objective(const MpccProblem& prob, const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
  Workspace w(prob);
  if (z.size() != w.n) throw std::invalid_argument("mpcc_objective: wrong decision size");
  return evaluate(w, z, Eigen::VectorXd(), 1.0, false, grad).F;
}

MpccSolution solve_mpcc(const MpccProblem& prob, const MpccSolution* warm) {
  const auto t_begin = std::chrono::steady_clock::now();
  Workspace w(prob);
  const SolverConfig& sc = prob.cfg.solver;
  const int n = w.n, N = w.N;

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  if (warm && static_cast<int>(warm->inputs.size()) == N &&
      static_cast<int>(warm->dv.size()) == N) {
    for (int k = 0; k < N; ++k) {
      z.segment<4>(4 * k) = warm->inputs[static_cast<std::size_t>(k)];
      z[4 * N + k] = warm->dv[static_cast<std::size_t>(k)];
    }
  }
  z = z.cwiseMax(w.lb).cwiseMin(w.ub);

  Eigen::VectorXd act_mask = Eigen::VectorXd::Zero(w.n_rows);
  for (int r = 0; r < w.n_rows; ++r)
    if (w.actionable[static_cast<std::size_t>(r) % w.stencils.size()]) act_mask[r] = 1.0;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(w.n_rows);
  if (warm && warm->lambda.size() == w.n_rows) lambda = warm->lambda.cwiseProduct(act_mask);
  double rho = sc.penalty_init;

  Eigen::VectorXd g(n), gn(n);
  EvalOut e = evaluate(w, z, lambda, rho, true, &g);

  /* Iterate selection. Feasible iterates compare by objective. Infeasible
   * ones compare by objective plus a fixed violation price: ranking purely
   * by violation would hand the controller ever-wilder inputs whenever the
   * constraint set has no feasible point (a reference pinned closer to an
   * obstacle than the required clearance), which compounds across periods. */
  auto better = [&](double viol_a, double f_a, double viol_b, double f_b) {
    const bool fa = viol_a <= sc.feas_tol, fb = viol_b <= sc.feas_tol;
    if (fa != fb) return fa;
    if (fa) return f_a < f_b;
    return f_a + 1e3 * viol_a < f_b + 1e3 * viol_b;
  };
  Eigen::VectorXd z_best = z;
  double best_viol = e.viol, best_F = e.F;

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;  // rescale B once from the first accepted curvature pair
  if (warm && warm->bfgs.rows() == n && warm->bfgs.cols() == n) {
    B = warm->bfgs;
    scaled = true;
  }
  double viol_ref = e.viol;
  int iters = 0;
  double kkt = kInf, kkt0 = 0.0;

  for (int it = 1; it <= sc.max_iters; ++it) {
    iters = it;
    kkt = ((z - g).cwiseMax(w.lb).cwiseMin(w.ub) - z).lpNorm<Eigen::Infinity>();
    if (it == 1) kkt0 = kkt;
    if (kkt <= sc.kkt_tol * std::max(1.0, kkt0) && e.viol <= sc.feas_tol) break;

    if (w.n_rows > 0 && it % sc.multiplier_every == 0) {
      lambda = (lambda - rho * e.rows).cwiseMax(0.0).cwiseProduct(act_mask);
      if (e.viol > 0.5 * viol_ref && e.viol > sc.feas_tol)
        rho = std::min(rho * sc.penalty_scale, sc.penalty_max);
      viol_ref = e.viol;
      e = evaluate(w, z, lambda, rho, true, &g);
    }

    Eigen::VectorXd d = solve_box_qp(B, g, w.lb - z, w.ub - z);
    double slope = g.dot(d);
    if (slope >= -1e-18) {
      d = (z - g).cwiseMax(w.lb).cwiseMin(w.ub) - z;
      slope = g.dot(d);
      if (slope >= -1e-18) break;
    }

    double alpha = 1.0;
    bool accepted = false;
    EvalOut en;
    for (int ls = 0; ls < 30; ++ls) {
      en = evaluate(w, z + alpha * d, lambda, rho, true, nullptr);
      if (en.phi <= e.phi + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd zn = z + alpha * d;
    en = evaluate(w, zn, lambda, rho, true, &gn);
    if (better(en.viol, en.F, best_viol, best_F)) {
      z_best = zn;
      best_viol = en.viol;
      best_F = en.F;
    }

    /* damped BFGS on the merit model */
    const Eigen::VectorXd s = zn - z;
    Eigen::VectorXd y = gn - g;
    if (!scaled) {
      const double sy0 = s.dot(y);
      if (sy0 > 1e-14) {
        const double gamma = std::clamp(y.squaredNorm() / sy0, 1e-2, 1e8);
        B = gamma * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
    }
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    double sy = s.dot(y);
    if (sBs > 1e-14) {
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        y = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(y);
      }
      if (sy > 1e-14) B += (y * y.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
    }
    z = zn;
    e = en;
    g = gn;
  }

  /* assemble the returned (best bound-feasible) iterate */
  EvalOut eb = evaluate(w, z_best, lambda, rho, true, &g);
  MpccSolution sol;
  sol.lambda = w.n_rows > 0
                   ? (lambda - rho * eb.rows).cwiseMax(0.0).cwiseProduct(act_mask).eval()
                   : lambda;
  sol.bfgs = B;
  sol.kkt = ((z_best - g).cwiseMax(w.lb).cwiseMin(w.ub) - z_best).lpNorm<Eigen::Infinity>();
  const Rollout track = w.roll(z_best, N, true);
  const ProgRollout prog = w.roll_progress(z_best);
  sol.inputs.resize(static_cast<std::size_t>(N));
  sol.dv.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    Vec4 u = w.input(z_best, k);
    u[0] = track.zeta_eff[static_cast<std::size_t>(k)];
    sol.inputs[static_cast<std::size_t>(k)] = u;
    sol.dv[static_cast<std::size_t>(k)] = prog.dv_eff[static_cast<std::size_t>(k)];
  }
  sol.states.resize(static_cast<std::size_t>(N) + 1);
  sol.progress.resize(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const Stage& s = track.x[static_cast<std::size_t>(k)];
    AugState a;
    a.s.p = s.p;
    a.s.v = s.v;
    a.s.q = Quat(s.q[0], s.q[1], s.q[2], s.q[3]);
    a.thrust = s.T;
    sol.states[static_cast<std::size_t>(k)] = a;
    sol.progress[static_cast<std::size_t>(k)] = {prog.theta[static_cast<std::size_t>(k)],
                                                 prog.v[static_cast<std::size_t>(k)]};
  }
  sol.objective = eb.F;
  sol.min_residual = eb.min_row;
  sol.feasible0 = eb.feasible0;
  sol.iterations = iters;
  sol.degraded = (w.n_rows > 0) && (eb.viol > sc.degraded_tol);
  sol.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                 t_begin).count();
  return sol;
}

MpccSolution receding_shift(const MpccSolution& sol) {
  MpccSolution out = sol;
  if (!sol.inputs.empty()) {
    out.inputs.erase(out.inputs.begin());
    out.inputs.push_back(out.inputs.back());
    out.dv.erase(out.dv.begin());
    out.dv.push_back(out.dv.back());
  }
  if (sol.states.size() > 1) {
    out.states.erase(out.states.begin());
    out.states.push_back(out.states.back());
    out.progress.erase(out.progress.begin());
    out.progress.push_back(out.progress.back());
  }
  /* shift the quasi-Newton model the same way the variables move */
  const int N = static_cast<int>(sol.inputs.size());
  if (N > 1 && sol.bfgs.rows() == 5 * N && sol.bfgs.cols() == 5 * N) {
    std::vector<int> map(static_cast<std::size_t>(5 * N));
    for (int k = 0; k < N; ++k) {
      const int src = std::min(k + 1, N - 1);
      for (int j = 0; j < 4; ++j) map[static_cast<std::size_t>(4 * k + j)] = 4 * src + j;
      map[static_cast<std::size_t>(4 * N + k)] = 4 * N + src;
    }
    Eigen::MatrixXd shifted(5 * N, 5 * N);
    for (int i = 0; i < 5 * N; ++i)
      for (int j = 0; j < 5 * N; ++j)
        shifted(i, j) = sol.bfgs(map[static_cast<std::size_t>(i)],
                                 map[static_cast<std::size_t>(j)]);
    /* the tail block is a copy of its source; decouple it so the model
     * stays positive definite */
    const int dup[5] = {4 * (N - 1), 4 * (N - 1) + 1, 4 * (N - 1) + 2, 4 * (N - 1) + 3,
                        5 * N - 1};
    for (int i : dup) {
      const double dii = shifted(i, i);
      shifted.row(i).setZero();
      shifted.col(i).setZero();
      shifted(i, i) = std::max(dii, 1e-2);
    }
    out.bfgs = shifted;
  }
  return out;
}

}  // namespace quadplan
