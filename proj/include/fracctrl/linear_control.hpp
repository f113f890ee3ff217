#pragma once

#include <Eigen/Dense>

#include "fracctrl/grid.hpp"
#include "fracctrl/transition.hpp"

namespace fracctrl {

// Kalman controllability test: rank [B | AB | ... | A^{d-1} B] by SVD.
struct KalmanReport {
  int rank = 0;
  double sigma_min = 0.0;  // smallest of the d leading singular values
  double sigma_max = 0.0;
  bool controllable = false;
};
KalmanReport kalman_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Weighted steering Gramian
//   W = integral_a^b (b-t)^{alpha-1} F(t) B B^T F(t)^T dt,
// assembled per eigencomponent with exact panel moments of the weight
// against the piecewise-linear interpolant of the integrand.
struct Gramian {
  Eigen::MatrixXd W;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool controllable = false;  // lambda_min > 1e-12 * lambda_max
};
Gramian gramian(const TransitionKernels& k, const Eigen::MatrixXd& B);

// Observability Gramian O = integral_a^b F^T B B^T F dt (regular integrand,
// composite trapezoid) and the observability constant C = 1 / lambda_min(O):
//   |z_b|^2 <= C * integral_a^b |(b-t)^{1-alpha} B^T z(t)|^2 dt.
struct ObservabilityReport {
  Eigen::MatrixXd O;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double constant = 0.0;  // C; +inf when not observable
  bool observable = false;
};
ObservabilityReport observability_constant(const TransitionKernels& k,
                                           const Eigen::MatrixXd& B);

// Minimum-energy terminal multiplier: solves W zhat = yb - Psi(a,b) y0 by
// Cholesky with iterative refinement; throws NotControllableError when the
// Gramian is numerically singular.
Eigen::VectorXd minimizer_zb(const Gramian& gram, const Eigen::MatrixXd& psi_ab,
                             const Eigen::VectorXd& y0, const Eigen::VectorXd& yb);

// State response y(t) = Psi(a,t) y0 + integral_a^t Phi(s,t) B u(s) ds for
// sampled controls u ((n+1) x N).
Trajectory apply_control(const TransitionKernels& k, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& u, const Eigen::VectorXd& y0);

// Weighted terminal integral tI_b^{1-alpha} z |_{t} of the adjoint state
// z(t) = Phi(t,b)^T z_b, evaluated with a Gauss-Jacobi rule in which the
// (b - t) powers cancel exactly. t = a gives the initial pairing value z0.
Eigen::VectorXd adjoint_initial_value(const TransitionKernels& k,
                                      const Eigen::VectorXd& z_b, double t);

// Quadratic steering functional
//   J(z) = 1/2 integral_a^b (b-t)^{alpha-1} |B^T F(t) z|^2 dt
//          - <yb, z> + <y0, z0(z)>,
// whose unique critical point is the minimum-energy multiplier.
double functional_J(const Eigen::VectorXd& z_b, const TransitionKernels& k,
                    const Eigen::MatrixXd& B, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& yb);

// Residual of the first-order optimality identity at zhat in the direction
// z_b: |<pairing of the two adjoint trajectories> - <yb, z_b> + <y0, z0>|,
// the pairing by the Gramian quadrature and z0 by the independent
// Gauss-Jacobi rule.
double euler_lagrange_residual(const Eigen::VectorXd& zhat,
                               const Eigen::VectorXd& z_b,
                               const TransitionKernels& k,
                               const Eigen::MatrixXd& B,
                               const Eigen::VectorXd& y0,
                               const Eigen::VectorXd& yb);

// Max of the directional residual over the coordinate directions.
double euler_lagrange_residual(const Eigen::VectorXd& zhat,
                               const TransitionKernels& k,
                               const Eigen::MatrixXd& B,
                               const Eigen::VectorXd& y0,
                               const Eigen::VectorXd& yb);

// Residual of the duality identity
//   <y(b), z_b> = <y0, z0(z_b)> + integral_a^b <u, B^T z> dt
// for an arbitrary sampled control u and terminal datum z_b; y is the state
// response to u and z the adjoint of z_b. Returns |LHS - RHS|; `scale`
// (optional out) receives the sum of the three term magnitudes.
double duality_residual(const TransitionKernels& k, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& u, const Eigen::VectorXd& z_b,
                        const Eigen::VectorXd& y0, double* scale = nullptr);

// Complete minimum-energy synthesis for the linear system.
struct LinearSynthesis {
  Eigen::VectorXd zhat;
  Eigen::MatrixXd u;  // (n+1) x N control samples, u = B^T F^T zhat
  Trajectory y;       // response to the sampled u (playback trajectory)
  // Terminal defect |Psi(a,b) y0 + W zhat - yb| of the synthesized control,
  // with W re-assembled on an independent quadrature so the estimate is not
  // correlated with the Gramian that produced zhat. The end point of `y`
  // additionally reflects the error of replaying u from grid samples.
  double steering_error = 0.0;
  double energy_weighted = 0.0;  // integral (b-t)^{alpha-1} |B^T F zhat|^2 dt
  double pairing = 0.0;          // <yb - Psi y0, zhat> (equals the energy)
  double l2_norm_u = 0.0;        // plain L2 norm of u
  double J = 0.0;
  double el_residual = 0.0;
  KalmanReport kalman;
  Gramian gram;
  ObservabilityReport obs;
};

LinearSynthesis synthesize_linear(const TransitionKernels& k,
                                  const Eigen::MatrixXd& B,
                                  const Eigen::VectorXd& y0,
                                  const Eigen::VectorXd& yb);

// Exact panel integration of (b-t)^{alpha-1} times the piecewise-linear
// interpolant of scalar samples (building block of the weighted quadratures).
double weighted_integral(const Eigen::VectorXd& samples, const Grid& grid,
                         double alpha);

}  // namespace fracctrl
