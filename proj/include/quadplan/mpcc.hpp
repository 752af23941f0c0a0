#pragma once

#include <Eigen/Dense>
#include <vector>

#include "quadplan/barrier.hpp"
#include "quadplan/bspline.hpp"
#include "quadplan/quad_model.hpp"

namespace quadplan {

struct MpccWeights {
  double q_l = 100.0;  // lag error
  double q_c = 100.0;  // contouring error
  Eigen::Vector4d q_u = Eigen::Vector4d(1e-3, 1.0, 1.0, 1.0);  // (thrust rate, omega)
  double r_dv = 1e-2;
  Eigen::Vector4d r_du = Eigen::Vector4d(1e-2, 1e-2, 1e-2, 1e-2);
  double mu = 1.0;  // progress reward
};

struct SolverConfig {
  int max_iters = 30;   // hard cap, anytime return
  double kkt_tol = 1e-4;  // relative to the first projected-gradient norm of the solve
  double feas_tol = 1e-6;      // violation the AL iteration drives towards
  double degraded_tol = 1e-3;  // violation past which the caller should distrust the solve
  double penalty_init = 10.0;
  double penalty_scale = 10.0;
  /* Multiplier updates, not penalty growth, do the fine convergence work; the
   * cap only has to keep the merit balanced when no feasible point exists. */
  double penalty_max = 1e5;
  int multiplier_every = 5;
};

struct MpccConfig {
  int horizon = 10;      // N
  double stage_dt = 0.1;
  double v_theta_max = 3.0;
  double dv_min = -5.0;
  double dv_max = 5.0;
  MpccWeights weights;
  SolverConfig solver;
};

struct ProgressState {
  double theta = 0.0;
  double v_theta = 0.0;
};

/* Snapshot of one contouring-control solve. The reference and distance field
 * are borrowed and must outlive the solve. A null df drops the static
 * barrier (unobstructed flight). */
struct MpccProblem {
  AugState x0;
  ProgressState prog0;
  Vec3 sigma0 = Vec3::Zero();  // observer estimate, first prediction step only
  Eigen::Vector4d u_prev = Eigen::Vector4d::Zero();  // input of the previous solve
  const RefTrajectory* ref = nullptr;
  const DistanceField* df = nullptr;
  std::vector<ObstacleSnapshot> obstacles;
  QuadParams quad;
  MpccConfig cfg;
  CbfConfig cbf;
  bool terminal = false;  // reference exhausted: regulate to its endpoint
};

struct MpccSolution {
  std::vector<Eigen::Vector4d> inputs;   // (thrust rate, omega), N entries
  std::vector<double> dv;                // progress acceleration, N entries
  std::vector<AugState> states;          // N+1, prediction-model rollout of inputs
  std::vector<ProgressState> progress;   // N+1
  Eigen::VectorXd lambda;                // barrier multipliers, reused by warm starts
  Eigen::MatrixXd bfgs;                  // quasi-Newton model, reused by warm starts
  double objective = 0.0;
  double kkt = 0.0;
  double min_residual = 0.0;  // smallest constrained barrier row, +inf if none
  bool feasible0 = true;      // h(x0) >= 0 for every barrier source
  int iterations = 0;
  bool degraded = false;      // best iterate violates a row beyond degraded_tol
  double solve_ms = 0.0;
};

/* e_l = (t' e) t with the unnormalized tangent t = dp/dtheta; e_c = e - e_l */
std::pair<Vec3, Vec3> lag_contour_errors(const Vec3& p, const RefTrajectory::Ref& ref);

/* Sequential-quadratic iteration on the bound-constrained augmented
 * Lagrangian: damped-BFGS model, projected conjugate-direction subproblem,
 * Armijo backtracking on the merit, multiplier/penalty updates on a fixed
 * cadence. Deterministic; always returns the best bound-feasible iterate. */
MpccSolution solve_mpcc(const MpccProblem& prob, const MpccSolution* warm = nullptr);

/* warm-start shift: drop stage 0, duplicate the final stage */
MpccSolution receding_shift(const MpccSolution& sol);

/* Objective and analytic gradient at a raw decision vector laid out as
 * [u_0 (4), ..., u_{N-1} (4), dv_0, ..., dv_{N-1}]; the hook the
 * finite-difference tests drive. */
double mpcc_objective(const MpccProblem& prob, const Eigen::VectorXd& z, Eigen::VectorXd* grad);

}  // namespace quadplan
