#include "fracctrl/frac_ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracctrl/quadrature.hpp"
#include "fracctrl/special_functions.hpp"

namespace fracctrl {

namespace {
constexpr int kAdjointQuadNodes = 40;
}

Trajectory solve_caputo_abm(const Rhs& rhs, const Eigen::VectorXd& y0,
                            const Grid& grid, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("solve_caputo_abm: order must lie in (0, 1)");
  const int n = grid.n;
  const int d = static_cast<int>(y0.size());
  const double h = grid.h();
  const double ha = std::pow(h, alpha);
  const double g1 = special::gamma(alpha + 1.0);
  const double g2 = special::gamma(alpha + 2.0);

  // Powers shared by the rectangle (predictor) and product-trapezoid
  // (corrector) weights.
  Eigen::VectorXd pa(n + 2), p1(n + 2);
  for (int m = 0; m <= n + 1; ++m) {
    pa[m] = std::pow(static_cast<double>(m), alpha);
    p1[m] = std::pow(static_cast<double>(m), alpha + 1.0);
  }

  Trajectory out;
  out.grid = grid;
  out.states.resize(n + 1, d);
  out.states.row(0) = y0.transpose();

  Eigen::MatrixXd f(n + 1, d);  // rhs samples
  f.row(0) = rhs(grid.t(0), y0).transpose();

  for (int m = 1; m <= n; ++m) {
    // Predictor: rectangle weights (m-j)^alpha - (m-j-1)^alpha.
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int j = 0; j < m; ++j) acc += (pa[m - j] - pa[m - j - 1]) * f.row(j);
    Eigen::VectorXd yp = y0 + (ha / g1) * acc.transpose();

    // Corrector: product-trapezoid weights.
    const double c0 = p1[m - 1] - p1[m] + (alpha + 1.0) * pa[m];
    Eigen::RowVectorXd acc2 = c0 * f.row(0);
    for (int j = 1; j < m; ++j) {
      const int k = m - j;
      acc2 += (p1[k + 1] - 2.0 * p1[k] + p1[k - 1]) * f.row(j);
    }
    acc2 += rhs(grid.t(m), yp).transpose();
    out.states.row(m) = y0.transpose() + (ha / g2) * acc2;
    f.row(m) = rhs(grid.t(m), out.states.row(m).transpose()).transpose();
  }
  return out;
}

Trajectory solve_caputo_linear(const Eigen::MatrixXd& A,
                               const std::function<double(double)>& g,
                               const Eigen::VectorXd& y0, const Grid& grid,
                               double alpha, const Eigen::MatrixXd* forcing) {
  if (forcing && (forcing->rows() != grid.n + 1 || forcing->cols() != y0.size()))
    throw std::invalid_argument("solve_caputo_linear: forcing shape mismatch");
  const double h = grid.h();
  auto rhs = [&](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    Eigen::VectorXd v = A * (g(t) * y);
    if (forcing) {
      // Forcing rows are node samples; ABM only evaluates at nodes.
      int j = static_cast<int>(std::lround((t - grid.a) / h));
      j = std::clamp(j, 0, grid.n);
      v += forcing->row(j).transpose();
    }
    return v;
  };
  return solve_caputo_abm(rhs, y0, grid, alpha);
}

Eigen::VectorXd AdjointTrajectory::z(int j) const {
  const double bt = grid.b - grid.t(j);
  const double f = std::pow(bt, alpha - 1.0);  // +inf at j = n for alpha < 1
  return f * w.row(j).transpose();
}

AdjointTrajectory solve_adjoint_terminal(const Eigen::MatrixXd& A,
                                         const std::function<double(double)>& g,
                                         const Eigen::VectorXd& z_b,
                                         const Grid& grid, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("solve_adjoint_terminal: order must lie in (0, 1)");
  const int n = grid.n;
  const int d = static_cast<int>(z_b.size());
  const double h = grid.h();
  const double ginv = 1.0 / special::gamma(alpha);

  // In sigma = b - t the regularized samples w(sigma) = sigma^{1-alpha}
  // z(b - sigma) satisfy
  //   w(sigma) = z_b/Gamma(alpha) + sigma^alpha/Gamma(alpha) *
  //              A^T integral_0^1 [xi (1-xi)]^{alpha-1} gt(sigma xi) w(sigma xi) dxi,
  // marched forward in sigma with linear interpolation; the last-panel
  // contribution is implicit and solved exactly (d x d system).
  quad::Rule rule = quad::gauss_jacobi01(kAdjointQuadNodes, alpha - 1.0, alpha - 1.0);
  auto gt = [&](double sigma) { return g(grid.b - sigma); };

  Eigen::MatrixXd w(n + 1, d);  // indexed by sigma node (0 at terminal time)
  w.row(0) = ginv * z_b.transpose();
  const Eigen::MatrixXd At = A.transpose();

  for (int m = 1; m <= n; ++m) {
    const double sigma = m * h;
    const double pref = std::pow(sigma, alpha) * ginv;
    Eigen::VectorXd known = Eigen::VectorXd::Zero(d);
    double c_implicit = 0.0;
    const int nq = static_cast<int>(rule.nodes.size());
    for (int q = 0; q < nq; ++q) {
      const double s = sigma * rule.nodes[q];
      const double wq = rule.weights[q] * gt(s);
      double pos = s / h;
      int j = std::clamp(static_cast<int>(std::floor(pos)), 0, m - 1);
      const double theta = std::clamp(pos - j, 0.0, 1.0);
      if (j + 1 == m) {
        known += wq * (1.0 - theta) * w.row(j).transpose();
        c_implicit += wq * theta;
      } else {
        known += wq * ((1.0 - theta) * w.row(j).transpose() +
                       theta * w.row(j + 1).transpose());
      }
    }
    // (I - pref * c_implicit * A^T) w_m = z_b/Gamma(alpha) + pref * A^T known
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) - pref * c_implicit * At;
    Eigen::VectorXd rhs = ginv * z_b + pref * (At * known);
    w.row(m) = M.partialPivLu().solve(rhs).transpose();
  }

  AdjointTrajectory out;
  out.grid = grid;
  out.alpha = alpha;
  out.z_b = z_b;
  out.w.resize(n + 1, d);
  // Re-index to forward time: row j corresponds to t_j = b - sigma_{n-j}.
  for (int j = 0; j <= n; ++j) out.w.row(j) = w.row(n - j);
  return out;
}

}  // namespace fracctrl
