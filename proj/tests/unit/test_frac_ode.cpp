#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fracctrl/frac_ode.hpp"
#include "fracctrl/grid.hpp"
#include "fracctrl/special_functions.hpp"
#include "support/instances.hpp"

using fracctrl::Grid;
using fracctrl::Trajectory;

namespace {

double sup_error_vs_ml(const Trajectory& y, double alpha, double lambda) {
  double worst = 0.0;
  for (int j = 0; j <= y.grid.n; ++j) {
    const double t = y.grid.t(j);
    const double exact = testsupport::ml(alpha, lambda * std::pow(t, alpha));
    worst = std::max(worst, std::abs(y.states(j, 0) - exact));
  }
  return worst;
}

}  // namespace

TEST_CASE("predictor-corrector reproduces the scalar relaxation solution") {
  // cD^alpha y = -y, y(0) = 1 has solution E_alpha(-t^alpha).
  const double alpha = 0.6;
  const fracctrl::Rhs rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(-y);
  };
  Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);

  const Trajectory fine = fracctrl::solve_caputo_abm(rhs, y0, Grid{0, 1, 2048}, alpha);
  CHECK(sup_error_vs_ml(fine, alpha, -1.0) < 2e-3);

  // The scheme refines: sup error shrinks under mesh doubling.
  const double e512 =
      sup_error_vs_ml(fracctrl::solve_caputo_abm(rhs, y0, Grid{0, 1, 512}, alpha),
                      alpha, -1.0);
  const double e1024 =
      sup_error_vs_ml(fracctrl::solve_caputo_abm(rhs, y0, Grid{0, 1, 1024}, alpha),
                      alpha, -1.0);
  CHECK(e512 / e1024 > 1.3);
  CHECK(e1024 / sup_error_vs_ml(fine, alpha, -1.0) > 1.3);
}

TEST_CASE("linear solver with constant forcing matches the saturation curve") {
  // cD^alpha y = -y + 1, y(0) = 0 has solution 1 - E_alpha(-t^alpha).
  const double alpha = 0.45;
  const Grid grid{0, 1, 2048};
  Eigen::MatrixXd A(1, 1);
  A << -1.0;
  Eigen::MatrixXd forcing = Eigen::MatrixXd::Ones(grid.n + 1, 1);
  const Trajectory y = fracctrl::solve_caputo_linear(
      A, [](double) { return 1.0; }, Eigen::VectorXd::Zero(1), grid, alpha,
      &forcing);
  double worst = 0.0;
  for (int j = 0; j <= grid.n; ++j) {
    const double t = grid.t(j);
    const double exact = 1.0 - testsupport::ml(alpha, -std::pow(t, alpha));
    worst = std::max(worst, std::abs(y.states(j, 0) - exact));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("linear solver without forcing agrees with the relaxation solution") {
  const double alpha = 0.7;
  Eigen::MatrixXd A(1, 1);
  A << -1.0;
  const Trajectory y = fracctrl::solve_caputo_linear(
      A, [](double) { return 1.0; }, Eigen::VectorXd::Ones(1), Grid{0, 1, 1024},
      alpha);
  CHECK(sup_error_vs_ml(y, alpha, -1.0) < 2e-3);
}

TEST_CASE("adjoint terminal solver carries the regularized two-parameter profile") {
  // For cD^alpha y = A y with scalar A = lambda, the adjoint state is
  // z(t) = (b-t)^{alpha-1} E_{alpha,alpha}(lambda (b-t)^alpha) z_b, so the
  // regularized samples w = (b-t)^{1-alpha} z follow the two-parameter
  // Mittag-Leffler profile directly.
  const double alpha = 0.6;
  const double lambda = -1.0;
  const Grid grid{0, 1, 1024};
  Eigen::MatrixXd A(1, 1);
  A << lambda;
  Eigen::VectorXd zb = Eigen::VectorXd::Ones(1);
  const fracctrl::AdjointTrajectory adj = fracctrl::solve_adjoint_terminal(
      A, [](double) { return 1.0; }, zb, grid, alpha);

  REQUIRE(adj.w.rows() == grid.n + 1);
  // Terminal sample is z_b / Gamma(alpha) exactly.
  CHECK(adj.w(grid.n, 0) ==
        doctest::Approx(1.0 / testsupport::gam(alpha)).epsilon(1e-13));

  double worst = 0.0;
  for (int j = 0; j <= grid.n; ++j) {
    const double bt = grid.b - grid.t(j);
    const double exact = testsupport::ml(alpha, lambda * std::pow(bt, alpha), alpha);
    worst = std::max(worst, std::abs(adj.w(j, 0) - exact));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("adjoint solver diagonalizes correctly for a coupled pair") {
  // Symmetric A => w(t) = U diag(E_{alpha,alpha}(lambda_i (b-t)^alpha)) U^T z_b.
  const double alpha = 0.55;
  const Grid grid{0, 1, 1024};
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.3, 0.3, -0.8;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd zb(2);
  zb << 0.7, -0.4;
  const fracctrl::AdjointTrajectory adj = fracctrl::solve_adjoint_terminal(
      A, [](double) { return 1.0; }, zb, grid, alpha);

  double worst = 0.0;
  for (int j = 0; j <= grid.n; ++j) {
    const double bt = grid.b - grid.t(j);
    Eigen::VectorXd diag(2);
    for (int i = 0; i < 2; ++i)
      diag[i] = testsupport::ml(
          alpha, es.eigenvalues()[i] * std::pow(bt, alpha), alpha);
    const Eigen::VectorXd exact =
        es.eigenvectors() * diag.asDiagonal() *
        es.eigenvectors().transpose() * zb;
    worst = std::max(worst, (adj.w.row(j).transpose() - exact).norm());
  }
  CHECK(worst < 3e-3);
}

TEST_CASE("adjoint z(j) unregularizes the samples") {
  const double alpha = 0.5;
  const Grid grid{0, 2, 64};
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd zb = Eigen::VectorXd::Ones(1);
  const fracctrl::AdjointTrajectory adj = fracctrl::solve_adjoint_terminal(
      A, [](double) { return 1.0; }, zb, grid, alpha);
  // A = 0: z(t) = (b-t)^{alpha-1} z_b / Gamma(alpha) exactly.
  for (int j : {0, 16, 48, 63}) {
    const double bt = grid.b - grid.t(j);
    const double exact = std::pow(bt, alpha - 1.0) / testsupport::gam(alpha);
    CHECK(adj.z(j)[0] == doctest::Approx(exact).epsilon(1e-10));
  }
}
