#pragma once

#include <Eigen/Dense>

#include "fracctrl/grid.hpp"

namespace fracctrl {

enum class Side { left, right };
enum class DerivKind { caputo_left, rl_right };

// Left Riemann-Liouville fractional integral of order alpha on a uniform
// grid, discretized by product (piecewise-linear) integration, reusable
// across many applications on the same grid. The rule integrates the
// piecewise-linear interpolant of the samples exactly:
//   I(t_m) = h^alpha / Gamma(alpha + 2) *
//            [ c0(m) f_0 + sum_{j=1}^{m-1} w(m - j) f_j + f_m ]
// with w(k) = (k+1)^{alpha+1} - 2 k^{alpha+1} + (k-1)^{alpha+1} and
// c0(m) = (m-1)^{alpha+1} - m^{alpha+1} + (alpha+1) m^alpha. Exact for
// constant and linear sample profiles.
class LeftIntegralOp {
 public:
  LeftIntegralOp(const Grid& grid, double alpha);

  // Samples at grid nodes -> integral samples at grid nodes (I(a) = 0).
  Eigen::VectorXd operator()(const Eigen::VectorXd& f) const;
  // Column-wise application for vector-valued samples.
  Eigen::MatrixXd operator()(const Eigen::MatrixXd& f) const;

  double alpha() const { return alpha_; }

 private:
  Grid grid_;
  double alpha_;
  double scale_;          // h^alpha / Gamma(alpha + 2)
  Eigen::VectorXd w_;     // w_[k], k = 1..n (w_[0] unused)
  Eigen::VectorXd c0_;    // c0_[m], m = 1..n
};

// Fractional integral of sampled data; side = right mirrors the kernel to
// integral_t^b (tau - t)^{alpha-1} f(tau) dtau / Gamma(alpha).
Eigen::VectorXd frac_integral(const Eigen::VectorXd& f, const Grid& grid,
                              double alpha, Side side = Side::left);
Eigen::MatrixXd frac_integral(const Eigen::MatrixXd& f, const Grid& grid,
                              double alpha, Side side = Side::left);

// Fractional derivative of sampled data of order alpha in (0, 1):
//   caputo_left: L1 difference scheme based at t = a; the value at node 0 is
//     extrapolated from node 1 (the scheme starts at the first interior node).
//   rl_right: right Riemann-Liouville derivative, computed as the negative
//     time derivative (central differences) of the right (1-alpha)-integral.
Eigen::VectorXd frac_derivative(const Eigen::VectorXd& f, const Grid& grid,
                                double alpha, DerivKind kind);

// Residual of the fractional integration-by-parts identity
//   integral_a^b f (cD^alpha g) dt
//     = [ (tI_b^{1-alpha} f) g ]_a^b + integral_a^b (tD_b^alpha f) g dt
// for sampled f, g, all terms by composite quadrature. Small residuals
// certify the discrete operators against each other.
double integration_by_parts_residual(const Eigen::VectorXd& f,
                                     const Eigen::VectorXd& g,
                                     const Grid& grid, double alpha);

}  // namespace fracctrl
