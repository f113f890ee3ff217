#pragma once

#include <Eigen/Dense>
#include <functional>

#include "fracctrl/grid.hpp"

namespace fracctrl {

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Predictor-corrector (Adams-Bashforth-Moulton, one corrector pass) solver
// for the Caputo initial-value problem
//   cD_a^alpha y = rhs(t, y),  y(a) = y0,  alpha in (0, 1),
// on a uniform grid: fractional rectangle-rule predictor, product-trapezoid
// corrector.
Trajectory solve_caputo_abm(const Rhs& rhs, const Eigen::VectorXd& y0,
                            const Grid& grid, double alpha);

// Linear system with a scalar time-varying coefficient,
//   cD_a^alpha y = A g(t) y + forcing(t),
// solved by the same scheme; `forcing` (optional) holds node samples, one row
// per node.
Trajectory solve_caputo_linear(const Eigen::MatrixXd& A,
                               const std::function<double(double)>& g,
                               const Eigen::VectorXd& y0, const Grid& grid,
                               double alpha,
                               const Eigen::MatrixXd* forcing = nullptr);

// Adjoint (right-sided Riemann-Liouville) terminal-value problem
//   D_b^alpha z = g(t) A^T z  on [a, b),   tI_b^{1-alpha} z |_{t=b} = z_b,
// for the dynamics cD^alpha y = A g y. Solutions blow up like
// (b - t)^{alpha-1}; the solver marches the regularized samples
//   w(t) = (b - t)^{1-alpha} z(t),
// which satisfy a weakly singular Volterra equation in sigma = b - t handled
// with a Gauss-Jacobi rule and an implicit last-panel solve. w(b) = z_b /
// Gamma(alpha).
struct AdjointTrajectory {
  Grid grid;       // in forward time t
  double alpha;
  Eigen::MatrixXd w;  // (n + 1) x d regularized samples, row j ~ t_j
  Eigen::VectorXd z_b;

  // Unregularized adjoint state z(t_j); infinite at t = b for alpha < 1.
  Eigen::VectorXd z(int j) const;
};

AdjointTrajectory solve_adjoint_terminal(const Eigen::MatrixXd& A,
                                         const std::function<double(double)>& g,
                                         const Eigen::VectorXd& z_b,
                                         const Grid& grid, double alpha);

}  // namespace fracctrl
