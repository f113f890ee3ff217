#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fracctrl/errors.hpp"
#include "fracctrl/frac_ode.hpp"
#include "fracctrl/linear_control.hpp"
#include "fracctrl/quadrature.hpp"
#include "fracctrl/special_functions.hpp"
#include "fracctrl/transition.hpp"
#include "support/instances.hpp"

using fracctrl::Grid;
using fracctrl::TransitionKernels;

namespace {

constexpr double kPi = 3.14159265358979323846;

TransitionKernels instance_kernels(const testsupport::LinearInstance& inst,
                                   double tol = 1e-10) {
  return fracctrl::build_kernels(-inst.A, inst.g, inst.grid, inst.alpha, tol);
}

}  // namespace

TEST_CASE("kalman rank classifies canonical pairs") {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, 0.0, 0.0;
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0;
  auto rep = fracctrl::kalman_rank(A, B);
  CHECK(rep.rank == 2);
  CHECK(rep.controllable);

  B << 1.0, 0.0;  // (A, e1): AB = 0, span is one-dimensional
  rep = fracctrl::kalman_rank(A, B);
  CHECK(rep.rank == 1);
  CHECK_FALSE(rep.controllable);

  rep = fracctrl::kalman_rank(A, Eigen::MatrixXd::Zero(2, 1));
  CHECK(rep.rank == 0);
  CHECK_FALSE(rep.controllable);
}

TEST_CASE("weighted integral has exact panel moments") {
  const Grid grid{0, 1, 7};
  const double alpha = 0.6;
  // Constant samples: integral (1-t)^{alpha-1} dt = 1/alpha.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.n + 1);
  CHECK(fracctrl::weighted_integral(ones, grid, alpha) ==
        doctest::Approx(1.0 / alpha).epsilon(1e-13));
  // Linear samples t: integral (1-t)^{alpha-1} t dt = B(2, alpha).
  Eigen::VectorXd lin(grid.n + 1);
  for (int j = 0; j <= grid.n; ++j) lin[j] = grid.t(j);
  CHECK(fracctrl::weighted_integral(lin, grid, alpha) ==
        doctest::Approx(fracctrl::special::beta(2.0, alpha)).epsilon(1e-13));
}

TEST_CASE("scalar pure-integrator synthesis matches every closed form") {
  // cD^{1/2} y = u on [0, 1], steering 0 -> 1. Known values:
  //   W = 2/pi, zhat = pi/2, u = sqrt(pi)/2 constant, J = -pi/4, C_obs = pi.
  const double alpha = 0.5;
  const Grid grid{0, 1, 4096};
  const TransitionKernels k = fracctrl::build_kernels(
      Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(grid.n + 1), grid,
      alpha, 1e-12);
  Eigen::MatrixXd B = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd yb = Eigen::VectorXd::Ones(1);

  const auto gram = fracctrl::gramian(k, B);
  CHECK(gram.controllable);
  CHECK(gram.W(0, 0) == doctest::Approx(2.0 / kPi).epsilon(1e-12));

  const auto s = fracctrl::synthesize_linear(k, B, y0, yb);
  CHECK(s.zhat[0] == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  const double uref = std::sqrt(kPi) / 2.0;
  for (int j : {0, 1000, 2048, 4096})
    CHECK(s.u(j, 0) == doctest::Approx(uref).epsilon(1e-12));
  CHECK(s.steering_error < 1e-9);
  CHECK(s.energy_weighted == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(s.pairing == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(s.J == doctest::Approx(-kPi / 4.0).epsilon(1e-10));
  CHECK(s.l2_norm_u == doctest::Approx(uref).epsilon(1e-10));
  CHECK(s.el_residual < 1e-8);
  CHECK(s.obs.constant == doctest::Approx(kPi).epsilon(1e-10));

  // Initial pairing value of the adjoint: A = 0 gives z0 = z_b exactly.
  const Eigen::VectorXd z0 =
      fracctrl::adjoint_initial_value(k, Eigen::VectorXd::Ones(1), 0.0);
  CHECK(z0[0] == doctest::Approx(1.0).epsilon(1e-10));

  // Duality identity for this exact control.
  double scale = 0.0;
  const double res = fracctrl::duality_residual(
      k, B, s.u, Eigen::VectorXd::Ones(1), y0, &scale);
  CHECK(res <= 1e-8 * scale);
}

TEST_CASE("gramian matches a semi-analytic oracle for diagonal dynamics") {
  // With A = diag(lambda) and g = 1, the substitution w = (b-t)^alpha turns
  // each Gramian entry into a smooth one-dimensional integral
  //   W_il = (B B^T)_il / alpha * integral_0^1 E(-l_i w) E(-l_l w) dw
  // evaluated here by adaptive Simpson on the Mittag-Leffler oracle.
  const double alpha = 0.55;
  const Grid grid{0, 1, 2048};
  const Eigen::Vector2d lam(0.6, 1.3);
  const Eigen::MatrixXd A = (-lam).asDiagonal();
  Eigen::MatrixXd B(2, 2);
  B << 1.0, 0.4, -0.3, 0.8;
  const TransitionKernels k = fracctrl::build_kernels(
      A, Eigen::VectorXd::Ones(grid.n + 1), grid, alpha, 1e-12);
  const auto gram = fracctrl::gramian(k, B);

  const Eigen::MatrixXd S = B * B.transpose();
  for (int i = 0; i < 2; ++i) {
    for (int l = 0; l < 2; ++l) {
      const double li = lam[i], ll = lam[l];
      const double integral = fracctrl::quad::adaptive_simpson(
          [&](double w) {
            return testsupport::ml(alpha, -li * w, alpha) *
                   testsupport::ml(alpha, -ll * w, alpha);
          },
          0.0, 1.0, 1e-11);
      const double exact = S(i, l) / alpha * integral;
      CHECK(gram.W(i, l) == doctest::Approx(exact).epsilon(5e-6));
    }
  }
}

TEST_CASE("minimizer satisfies the normal equations to refinement accuracy") {
  const auto inst = testsupport::random_instance(314, 600, 3, 2.0, 0.45, 0.8, 0.5);
  const TransitionKernels k = instance_kernels(inst);
  const auto gram = fracctrl::gramian(k, inst.B);
  if (!gram.controllable) return;  // seed-dependent guard; seed 314 is controllable
  const Eigen::VectorXd zhat =
      fracctrl::minimizer_zb(gram, k.psi_ab(), inst.y0, inst.yb);
  const Eigen::VectorXd defect = inst.yb - k.psi_ab() * inst.y0;
  CHECK((gram.W * zhat - defect).norm() <= 1e-10 * (1.0 + defect.norm()));
}

TEST_CASE("minimizer refuses a numerically singular Gramian") {
  testsupport::Rng rng(11);
  auto inst = testsupport::random_instance(11, 300, 3, 2.0, 0.5, 0.7);
  inst.d = 3;
  inst.N = 2;
  inst.A = testsupport::random_psd(3, rng, 0.1, 2.0);
  inst.B = testsupport::random_matrix(3, 2, rng);
  testsupport::make_degenerate(&inst, rng);
  inst.y0 = testsupport::random_vector(3, rng);
  inst.yb = testsupport::random_vector(3, rng);
  inst.g = Eigen::VectorXd::Ones(inst.grid.n + 1);
  const TransitionKernels k = instance_kernels(inst);
  const auto gram = fracctrl::gramian(k, inst.B);
  CHECK_FALSE(gram.controllable);
  CHECK_THROWS_AS(
      fracctrl::minimizer_zb(gram, k.psi_ab(), inst.y0, inst.yb),
      fracctrl::NotControllableError);
}

TEST_CASE("duality identity holds for arbitrary smooth controls") {
  const auto inst = testsupport::random_instance(52, 800, 3, 2.0, 0.45, 0.8, 0.5);
  const TransitionKernels k = instance_kernels(inst);
  testsupport::Rng rng(1234);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::MatrixXd u(inst.grid.n + 1, inst.N);
    for (int c = 0; c < inst.N; ++c) {
      const double c0 = nd(rng), c1 = nd(rng), c2 = nd(rng);
      for (int j = 0; j <= inst.grid.n; ++j) {
        const double t = inst.grid.t(j);
        u(j, c) = c0 + c1 * std::sin(kPi * t) + c2 * t * t;
      }
    }
    const Eigen::VectorXd zb = testsupport::random_vector(inst.d, rng);
    double scale = 0.0;
    const double res = fracctrl::duality_residual(k, inst.B, u, zb, inst.y0, &scale);
    CHECK(res <= 1e-5 * scale);
  }
}

TEST_CASE("synthesis passes its own optimality and energy certificates") {
  const auto inst = testsupport::random_instance(777, 1000, 3, 2.0, 0.45, 0.8, 0.5);
  const TransitionKernels k = instance_kernels(inst);
  const auto s = fracctrl::synthesize_linear(k, inst.B, inst.y0, inst.yb);

  // Energy identity: weighted energy equals the defect pairing.
  CHECK(s.energy_weighted ==
        doctest::Approx(s.pairing).epsilon(1e-10));
  // First-order optimality at the computed multiplier.
  CHECK(s.el_residual <= 1e-5 * (1.0 + inst.yb.norm() * s.zhat.norm()));
  // Observability constant bounds the control cost.
  const double defect = (inst.yb - k.psi_ab() * inst.y0).norm();
  REQUIRE(s.obs.observable);
  CHECK(s.l2_norm_u <= std::sqrt(s.obs.constant) * defect * (1.0 + 1e-6));
  // Terminal accuracy.
  CHECK(s.steering_error <= 1e-3 * (1.0 + inst.yb.norm()));
}

TEST_CASE("adjoint growth stays under the Mittag-Leffler envelope") {
  const auto inst = testsupport::random_instance(4242, 800, 3, 2.0, 0.45, 0.8, 0.5);
  const TransitionKernels k = instance_kernels(inst);
  const auto s = fracctrl::synthesize_linear(k, inst.B, inst.y0, inst.yb);

  const double lam_max = fracctrl::diagonalize(inst.A).lambda.maxCoeff();
  const double M = inst.g.cwiseAbs().maxCoeff();
  const double delta = inst.grid.b - inst.grid.a;
  const double r_plus =
      testsupport::ml(inst.alpha, lam_max * M * std::pow(delta, inst.alpha),
                   inst.alpha);

  const auto gfun = [&](double t) {
    return fracctrl::interp_linear(inst.grid, inst.g, t);
  };
  const auto adj = fracctrl::solve_adjoint_terminal(-inst.A, gfun, s.zhat,
                                                    inst.grid, inst.alpha);
  double max_w = 0.0;
  for (int j = 0; j <= inst.grid.n; ++j)
    max_w = std::max(max_w, adj.w.row(j).norm());
  CHECK(max_w <= r_plus * s.zhat.norm() + 1e-6);

  // The synthesized control inherits the same pointwise envelope.
  double bt_norm = 0.0;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.B.transpose());
    bt_norm = svd.singularValues()[0];
  }
  double max_u = 0.0;
  for (int j = 0; j <= inst.grid.n; ++j)
    max_u = std::max(max_u, s.u.row(j).norm());
  CHECK(max_u <= r_plus * bt_norm * s.zhat.norm() + 1e-6);
}

TEST_CASE("three verdicts agree across a quick seeded sweep") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    auto inst = testsupport::random_instance(seed, 400, 4, 2.0, 0.4, 0.85);
    if (seed % 2 == 1) {
      testsupport::Rng rng(seed * 13 + 1);
      testsupport::make_degenerate(&inst, rng);
    }
    const TransitionKernels k = instance_kernels(inst);
    const auto kal = fracctrl::kalman_rank(-inst.A, inst.B);
    const auto gram = fracctrl::gramian(k, inst.B);
    const auto obs = fracctrl::observability_constant(k, inst.B);
    CHECK(kal.controllable == gram.controllable);
    CHECK(gram.controllable == obs.observable);
  }
}
