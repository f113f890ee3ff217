#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fracctrl/grid.hpp"
#include "fracctrl/linear_control.hpp"
#include "fracctrl/problem.hpp"
#include "fracctrl/transition.hpp"

namespace fracctrl {

// Uncontrolled nonlinear trajectory cD^alpha z = -A f(z) z, z(0) = y0.
Trajectory solve_caputo_nonlinear(const Eigen::MatrixXd& A, const ScalarField& f,
                                  const Eigen::VectorXd& y0, const Grid& grid,
                                  double alpha);

// Split-point constants of the two-phase construction:
//   M_v = sup over nodes of f(v(t)),   K_v = max(1, M_v)^{1/alpha},
//   T_v = T (1 - K_v^{-alpha}),        K_z = sup |t^{1-alpha} z'(t)|
// (K_z estimated on the coast segment with difference quotients).
struct SplitConstants {
  double M_v = 0.0;
  double K_v = 1.0;
  double T_v = 0.0;
  double K_z = 0.0;
};

SplitConstants compute_split_constants(const Trajectory& v, const ScalarField& f,
                                       double alpha, double T,
                                       const Trajectory& coast);

// Memory term of the pre-split history: for t >= T_v,
//   h(t) = 1/Gamma(1-alpha) integral_0^{T_v} z'(s) (t-s)^{-alpha} ds,
// with piecewise-constant z' panels integrated exactly against the kernel and
// an s^alpha profile model on the first panel. Rows align with eval_ts.
Eigen::MatrixXd memory_term(const Trajectory& z, int split_index, double alpha,
                            const std::vector<double>& eval_ts);

// Memory response with zero initial data at the split time:
//   cD_{T_v}^alpha y_p = A g y_p - h,  y_p(T_v) = 0  =>  y_p = -phi_action(h).
Eigen::MatrixXd solve_yp(const TransitionKernels& k, const Eigen::MatrixXd& h);

// One audited bound check: measured value vs analytic bound.
struct AuditEntry {
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct IterationRecord {
  int iteration = 0;
  SplitConstants sc;
  int split_index = 0;
  double omega = 1.0;         // relaxation factor used this step
  double update_norm = 0.0;   // sup_j |y_new(t_j) - v(t_j)|
  double terminal_error = 0.0;
  double gram_lambda_min = 0.0;
  double gram_lambda_max = 0.0;
  AuditEntry audit_h;       // sup |h|        <= K_z Gamma(alpha)
  AuditEntry audit_yp;      // sup |y_p|      <= K_z Gamma(alpha) T^alpha / alpha
  AuditEntry audit_u2;      // sup |u_2|      <= C_u K_v^alpha
  AuditEntry audit_y;       // sup |y|        <= C_y
  AuditEntry audit_ycT;     // |y_{c,T}|      <= C_T
  AuditEntry audit_dcaputo; // sup |cD^alpha y| on the control window <= C_alpha
};

struct SynthesisResult {
  bool converged = false;
  int iterations = 0;
  Trajectory y;           // assembled trajectory on the full grid
  Eigen::MatrixXd u;      // (n+1) x N control, zero before the split node
  double terminal_error = 0.0;
  double l2_norm_u = 0.0;
  int split_index = 0;
  SplitConstants sc;      // final iterate's constants
  double C_T = 0.0, C_u = 0.0, C_y = 0.0, C_alpha = 0.0, c_w = 0.0;
  Eigen::VectorXd zhat;
  double gram_lambda_min = 0.0, gram_lambda_max = 0.0;
  std::vector<IterationRecord> records;
};

// One pass of the linearized two-phase synthesis around the iterate v:
// coast on [0, T_v], memory-compensated minimum-energy steering on [T_v, T]
// with frozen gain g = f(v). Returns the assembled trajectory, the control
// and the audit record.
struct AssembledIterate {
  Trajectory y;
  Eigen::MatrixXd u;
  IterationRecord record;
  Eigen::VectorXd zhat;
  double C_T = 0.0, C_u = 0.0, C_y = 0.0, C_alpha = 0.0, c_w = 0.0;
};

AssembledIterate assemble_iterate(const Trajectory& v, const ProblemSpec& spec,
                                  const Trajectory& coast, double K_z);

// Damped fixed-point loop over assemble_iterate, starting from the coast
// trajectory. Relaxation starts at numerics.damping and halves (once) after
// two consecutive growths of the update norm. `converged` is false when the
// iteration budget is exhausted; no exception is thrown here so callers can
// inspect the partial report.
SynthesisResult fixed_point_solve(const ProblemSpec& spec);

}  // namespace fracctrl
