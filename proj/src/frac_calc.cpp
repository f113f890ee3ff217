#include "fracctrl/frac_calc.hpp"

#include <cmath>
#include <stdexcept>

#include "fracctrl/special_functions.hpp"

namespace fracctrl {

namespace {

void check_alpha01(double alpha, const char* who) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument(std::string(who) + ": order must lie in (0, 1)");
}

Eigen::VectorXd reversed(const Eigen::VectorXd& v) {
  return v.reverse();
}

}  // namespace

LeftIntegralOp::LeftIntegralOp(const Grid& grid, double alpha)
    : grid_(grid), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("LeftIntegralOp: order must lie in (0, 2)");
  const int n = grid.n;
  scale_ = std::pow(grid.h(), alpha) / special::gamma(alpha + 2.0);
  // Powers m^{alpha+1} and m^alpha, m = 0..n+1.
  Eigen::VectorXd p1(n + 2), pa(n + 2);
  for (int m = 0; m <= n + 1; ++m) {
    p1[m] = std::pow(static_cast<double>(m), alpha + 1.0);
    pa[m] = std::pow(static_cast<double>(m), alpha);
  }
  w_.resize(n + 1);
  w_[0] = 0.0;
  for (int k = 1; k <= n; ++k) w_[k] = p1[k + 1] - 2.0 * p1[k] + p1[k - 1];
  c0_.resize(n + 1);
  c0_[0] = 0.0;
  for (int m = 1; m <= n; ++m)
    c0_[m] = p1[m - 1] - p1[m] + (alpha + 1.0) * pa[m];
}

Eigen::VectorXd LeftIntegralOp::operator()(const Eigen::VectorXd& f) const {
  const int n = grid_.n;
  if (f.size() != n + 1)
    throw std::invalid_argument("LeftIntegralOp: sample count mismatch");
  Eigen::VectorXd out(n + 1);
  out[0] = 0.0;
  for (int m = 1; m <= n; ++m) {
    double acc = c0_[m] * f[0] + f[m];
    // sum_{j=1}^{m-1} w_[m-j] f[j] as a reversed-segment dot product
    for (int j = 1; j < m; ++j) acc += w_[m - j] * f[j];
    out[m] = scale_ * acc;
  }
  return out;
}

Eigen::MatrixXd LeftIntegralOp::operator()(const Eigen::MatrixXd& f) const {
  Eigen::MatrixXd out(f.rows(), f.cols());
  for (int c = 0; c < f.cols(); ++c)
    out.col(c) = (*this)(Eigen::VectorXd(f.col(c)));
  return out;
}

Eigen::VectorXd frac_integral(const Eigen::VectorXd& f, const Grid& grid,
                              double alpha, Side side) {
  LeftIntegralOp op(grid, alpha);
  if (side == Side::left) return op(f);
  return reversed(op(reversed(f)));
}

Eigen::MatrixXd frac_integral(const Eigen::MatrixXd& f, const Grid& grid,
                              double alpha, Side side) {
  Eigen::MatrixXd out(f.rows(), f.cols());
  for (int c = 0; c < f.cols(); ++c)
    out.col(c) = frac_integral(Eigen::VectorXd(f.col(c)), grid, alpha, side);
  return out;
}

Eigen::VectorXd frac_derivative(const Eigen::VectorXd& f, const Grid& grid,
                                double alpha, DerivKind kind) {
  check_alpha01(alpha, "frac_derivative");
  const int n = grid.n;
  if (f.size() != n + 1)
    throw std::invalid_argument("frac_derivative: sample count mismatch");
  const double h = grid.h();
  Eigen::VectorXd out(n + 1);

  if (kind == DerivKind::caputo_left) {
    // L1 scheme: D(t_m) = 1/(Gamma(2-alpha) h^alpha)
    //            * sum_{k=0}^{m-1} b_k (f_{m-k} - f_{m-k-1}),
    // b_k = (k+1)^{1-alpha} - k^{1-alpha}.
    Eigen::VectorXd b(n);
    for (int k = 0; k < n; ++k)
      b[k] = std::pow(k + 1.0, 1.0 - alpha) - std::pow(static_cast<double>(k), 1.0 - alpha);
    const double scale = 1.0 / (special::gamma(2.0 - alpha) * std::pow(h, alpha));
    for (int m = 1; m <= n; ++m) {
      double acc = 0.0;
      for (int k = 0; k < m; ++k) acc += b[k] * (f[m - k] - f[m - k - 1]);
      out[m] = scale * acc;
    }
    out[0] = out[1];  // the scheme starts at the first interior node
    return out;
  }

  // rl_right: D_b^alpha f = -d/dt [ tI_b^{1-alpha} f ].
  Eigen::VectorXd R = frac_integral(f, grid, 1.0 - alpha, Side::right);
  for (int m = 1; m < n; ++m) out[m] = -(R[m + 1] - R[m - 1]) / (2.0 * h);
  out[0] = -(-3.0 * R[0] + 4.0 * R[1] - R[2]) / (2.0 * h);
  out[n] = -(3.0 * R[n] - 4.0 * R[n - 1] + R[n - 2]) / (2.0 * h);
  return out;
}

double integration_by_parts_residual(const Eigen::VectorXd& f,
                                     const Eigen::VectorXd& g,
                                     const Grid& grid, double alpha) {
  check_alpha01(alpha, "integration_by_parts_residual");
  const int n = grid.n;
  const double h = grid.h();
  Eigen::VectorXd dg = frac_derivative(g, grid, alpha, DerivKind::caputo_left);
  Eigen::VectorXd df = frac_derivative(f, grid, alpha, DerivKind::rl_right);
  Eigen::VectorXd rf = frac_integral(f, grid, 1.0 - alpha, Side::right);

  auto trapz = [&](auto&& values) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += 0.5 * h * (values(j) + values(j + 1));
    return acc;
  };
  const double lhs = trapz([&](int j) { return f[j] * dg[j]; });
  const double boundary = rf[n] * g[n] - rf[0] * g[0];
  const double rhs = boundary + trapz([&](int j) { return df[j] * g[j]; });
  return std::abs(lhs - rhs);
}

}  // namespace fracctrl
