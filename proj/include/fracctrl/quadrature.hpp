#pragma once

#include <Eigen/Dense>
#include <functional>

namespace fracctrl::quad {

// Quadrature rule on [0, 1]: sum_i weights[i] * f(nodes[i]) approximates
// the weighted integral the rule was built for.
struct Rule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// n-point Gauss-Jacobi rule for the weight x^p (1 - x)^q on [0, 1],
// p, q > -1, built by the Golub-Welsch eigenvalue method. Exact for
// polynomial f of degree <= 2n - 1:
//   integral_0^1 x^p (1-x)^q f(x) dx = sum_i w_i f(x_i).
Rule gauss_jacobi01(int n, double p, double q);

// Adaptive Simpson integration of a smooth integrand on [lo, hi] to absolute
// tolerance abs_tol.
double adaptive_simpson(const std::function<double(double)>& f, double lo,
                        double hi, double abs_tol, int max_depth = 60);

}  // namespace fracctrl::quad
