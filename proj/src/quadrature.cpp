#include "fracctrl/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "fracctrl/special_functions.hpp"

namespace fracctrl::quad {

Rule gauss_jacobi01(int n, double p, double q) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi01: need n >= 1");
  if (!(p > -1.0) || !(q > -1.0))
    throw std::invalid_argument("gauss_jacobi01: weight exponents must exceed -1");

  // Classical Jacobi weight (1-u)^A (1+u)^B on [-1,1] maps to x^p (1-x)^q on
  // [0,1] under u = 2x - 1 with A = q, B = p.
  const double A = q, B = p;

  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  const double apb = A + B;
  diag[0] = (B - A) / (apb + 2.0);
  for (int k = 1; k < n; ++k) {
    const double den = (2.0 * k + apb) * (2.0 * k + apb + 2.0);
    diag[k] = (B * B - A * A) / den;
  }
  for (int k = 1; k < n; ++k) {
    double b2;
    if (k == 1) {
      // Reduced form valid even when A + B = -1 (the general expression is
      // 0/0 there).
      b2 = 4.0 * (1.0 + A) * (1.0 + B) /
           ((2.0 + apb) * (2.0 + apb) * (3.0 + apb));
    } else {
      const double s = 2.0 * k + apb;
      b2 = 4.0 * k * (k + A) * (k + B) * (k + apb) / (s * s * (s * s - 1.0));
    }
    off[k - 1] = std::sqrt(b2);
  }

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) J(k, k) = diag[k];
  for (int k = 0; k + 1 < n; ++k) {
    J(k, k + 1) = off[k];
    J(k + 1, k) = off[k];
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi01: eigen decomposition failed");

  // mu0 = integral_{-1}^{1} (1-u)^A (1+u)^B du = 2^{A+B+1} Beta(A+1, B+1);
  // the [0,1] weights carry the 2^{-(A+B+1)} Jacobian factor, so it cancels:
  // w01_i = Beta(A+1, B+1) * v0_i^2 ... with Beta evaluated stably via logs.
  const double beta01 = special::beta(A + 1.0, B + 1.0);

  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = 0.5 * (es.eigenvalues()[i] + 1.0);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = beta01 * v0 * v0;
  }
  return r;
}

namespace {

double simpson(double fa, double fm, double fb, double h6) {
  return h6 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double lo,
                     double hi, double flo, double fmid, double fhi,
                     double whole, double tol, int depth) {
  const double m = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + m), rm = 0.5 * (m + hi);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(flo, flm, fmid, (m - lo) / 6.0);
  const double right = simpson(fmid, frm, fhi, (hi - m) / 6.0);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, lo, m, flo, flm, fmid, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo,
                        double hi, double abs_tol, int max_depth) {
  if (hi == lo) return 0.0;
  const double m = 0.5 * (lo + hi);
  const double flo = f(lo), fmid = f(m), fhi = f(hi);
  const double whole = simpson(flo, fmid, fhi, (hi - lo) / 6.0);
  return adaptive_step(f, lo, hi, flo, fmid, fhi, whole,
                       std::max(abs_tol, 1e-300), max_depth);
}

}  // namespace fracctrl::quad
