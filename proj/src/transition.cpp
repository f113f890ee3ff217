#include "fracctrl/transition.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracctrl/errors.hpp"
#include "fracctrl/quadrature.hpp"
#include "fracctrl/special_functions.hpp"

namespace fracctrl {

namespace {

constexpr int kBackwardQuadNodes = 64;
constexpr int kMaxDepth = 200;

// Truncation depth for the layer series from the Mittag-Leffler majorant
// rho^k / Gamma(k alpha + 1) < tol, plus the summed tail bound.
int majorant_depth(double rho, double alpha, double tol, double* tail) {
  int K = 0;
  double term;
  for (K = 0; K <= kMaxDepth; ++K) {
    term = std::exp((K + 1) * std::log(std::max(rho, 1e-300)) -
                    special::log_gamma((K + 1) * alpha + 1.0));
    if (term < tol || rho == 0.0) break;
  }
  if (K > kMaxDepth)
    throw std::runtime_error(
        "build_kernels: series depth cap exceeded; reduce |A| g (b-a)^alpha");
  double t = 0.0;
  for (int k = K + 1; k <= K + 400; ++k) {
    const double r = std::exp(k * std::log(std::max(rho, 1e-300)) -
                              special::log_gamma(k * alpha + 1.0));
    t += r;
    if (r < tol * 1e-8) break;
  }
  *tail = (rho == 0.0) ? 0.0 : t;
  return K;
}

}  // namespace

Diagonalization diagonalize(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols())
    throw InputError("diagonalize: matrix must be square");
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InputError("diagonalize: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("diagonalize: eigen decomposition failed");
  Diagonalization d;
  d.lambda = es.eigenvalues();
  d.U = es.eigenvectors();
  // Deterministic sign convention: first component of magnitude > 1e-12
  // positive in each column.
  for (int c = 0; c < d.U.cols(); ++c) {
    for (int r = 0; r < d.U.rows(); ++r) {
      if (std::abs(d.U(r, c)) > 1e-12) {
        if (d.U(r, c) < 0.0) d.U.col(c) = -d.U.col(c);
        break;
      }
    }
  }
  return d;
}

Eigen::MatrixXd TransitionKernels::psi(int j) const {
  return diag.U * psi_d.row(j).asDiagonal() * diag.U.transpose();
}

Eigen::MatrixXd TransitionKernels::F(int j) const {
  return diag.U * f_d.row(j).asDiagonal() * diag.U.transpose();
}

Eigen::MatrixXd TransitionKernels::phi_action(const Eigen::MatrixXd& p) const {
  const int n = grid.n;
  const int d = dim();
  if (p.rows() != n + 1 || p.cols() != d)
    throw std::invalid_argument("phi_action: sample shape mismatch");
  const Eigen::MatrixXd pt = p * diag.U;  // eigenbasis components per column
  Eigen::MatrixXd qt(n + 1, d);
  for (int i = 0; i < d; ++i) {
    const double lam = diag.lambda[i];
    Eigen::VectorXd cur = (*iop)(Eigen::VectorXd(pt.col(i)));
    Eigen::VectorXd acc = cur;
    if (lam != 0.0) {
      for (int k = 1; k <= depth; ++k) {
        cur = lam * (*iop)(Eigen::VectorXd(g.cwiseProduct(cur)));
        acc += cur;
      }
    }
    qt.col(i) = acc;
  }
  return qt * diag.U.transpose();
}

Eigen::MatrixXd TransitionKernels::f_apply(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd vt = diag.U.transpose() * v;
  // Row j: U (f_d.row(j) .* vt)
  Eigen::MatrixXd scaled = f_d.array().rowwise() * vt.transpose().array();
  return scaled * diag.U.transpose();
}

Eigen::MatrixXd TransitionKernels::f_apply_fine(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd vt = diag.U.transpose() * v;
  Eigen::MatrixXd scaled = f_fine.array().rowwise() * vt.transpose().array();
  return scaled * diag.U.transpose();
}

TransitionKernels build_kernels(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& g_samples,
                                const Grid& grid, double alpha, double tol,
                                int refine) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("build_kernels: order must lie in (0, 1)");
  if (g_samples.size() != grid.n + 1)
    throw std::invalid_argument("build_kernels: coefficient sample count mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("build_kernels: tol must be positive");
  if (refine < 1) throw std::invalid_argument("build_kernels: refine must be >= 1");

  TransitionKernels k;
  k.grid = grid;
  k.alpha = alpha;
  k.tol = tol;
  k.diag = diagonalize(A);
  k.g = g_samples;
  k.g_max = g_samples.cwiseAbs().maxCoeff();
  k.iop = std::make_shared<LeftIntegralOp>(grid, alpha);

  k.refine = refine;
  k.grid_fine = Grid{grid.a, grid.b, grid.n * refine};
  const int n = grid.n;
  const int nf = k.grid_fine.n;
  const int d = k.dim();

  // Piecewise-linear refinement of the coefficient samples (exact: the fine
  // nodes subdivide the working panels, and the data is linear between
  // working nodes by convention).
  k.g_fine.resize(nf + 1);
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < refine; ++m)
      k.g_fine[j * refine + m] =
          k.g[j] + (k.g[j + 1] - k.g[j]) * (static_cast<double>(m) / refine);
  k.g_fine[nf] = k.g[n];

  const double delta = grid.b - grid.a;
  const double lam_bar = k.diag.lambda.cwiseAbs().maxCoeff();
  const double rho = lam_bar * k.g_max * std::pow(delta, alpha);

  double tail_f = 0.0;
  k.depth = majorant_depth(rho, alpha, tol, &tail_f);
  k.tail_bound_forward = tail_f;

  // Backward majorant sum_{k>K} rho^k / Gamma(alpha (k+1)).
  {
    double t = 0.0;
    if (rho > 0.0) {
      for (int kk = k.depth + 1; kk <= k.depth + 400; ++kk) {
        const double r = std::exp(kk * std::log(rho) -
                                  special::log_gamma(alpha * (kk + 1.0)));
        t += r;
        if (r < tol * 1e-8) break;
      }
    }
    k.tail_bound_backward = t;
  }

  // Forward scalar layers s_k = I^alpha (g s_{k-1}) on the tabulation grid,
  // shared across eigencomponents.
  LeftIntegralOp iop_fine(k.grid_fine, alpha);
  k.s.clear();
  k.s.reserve(k.depth + 1);
  k.s.push_back(Eigen::VectorXd::Ones(nf + 1));
  for (int kk = 1; kk <= k.depth; ++kk)
    k.s.push_back(iop_fine(Eigen::VectorXd(k.g_fine.cwiseProduct(k.s.back()))));

  k.psi_fine.resize(nf + 1, d);
  k.max_term_forward = 0.0;
  for (int i = 0; i < d; ++i) {
    const double lam = k.diag.lambda[i];
    Eigen::VectorXd acc = Eigen::VectorXd::Ones(nf + 1);
    double lp = 1.0;
    for (int kk = 1; kk <= k.depth && lam != 0.0; ++kk) {
      lp *= lam;
      acc += lp * k.s[kk];
      k.max_term_forward =
          std::max(k.max_term_forward, std::abs(lp) * k.s[kk].cwiseAbs().maxCoeff());
    }
    k.psi_fine.col(i) = acc;
  }

  // Backward regularized layers m_k on the tabulation grid. Each layer
  // factors as m_k(t) = (b-t)^{k alpha} rho_k(t) with rho_k smooth and
  // bounded through t = b, and the recursion integral
  //   integral_0^1 xi^{alpha-1} (1-xi)^{alpha-1} (g m_{k-1})(t + (b-t) xi) dxi
  // is evaluated after the substitution 1 - xi = (1 - eta)^{1/alpha}:
  //   (b-tau)^{(k-1) alpha} = (b-t)^{(k-1) alpha} (1-eta)^{k-1}
  // comes out of the integrand exactly (polynomial in eta), the fixed
  // Gauss-Jacobi rule (weight eta^{alpha-1}) absorbs the remaining left-end
  // power, and only the smooth factors g rho_{k-1} are ever interpolated.
  // Tabulating rho_k instead of m_k keeps the interpolation error O(h^2)
  // uniformly; interpolating m_k directly would lose accuracy near t = b
  // where its derivative blows up.
  const double ginv = 1.0 / special::gamma(alpha);
  quad::Rule rule = quad::gauss_jacobi01(kBackwardQuadNodes, alpha - 1.0, 0.0);
  const int nq = static_cast<int>(rule.nodes.size());
  Eigen::VectorXd xi_q(nq), coef_q(nq), one_minus_eta(nq);
  for (int q = 0; q < nq; ++q) {
    const double eta = rule.nodes[q];
    const double xi = 1.0 - std::pow(1.0 - eta, 1.0 / alpha);
    xi_q[q] = xi;
    coef_q[q] = rule.weights[q] * std::pow(xi / eta, alpha - 1.0) / alpha;
    one_minus_eta[q] = 1.0 - eta;
  }

  Eigen::VectorXd rho_prev = Eigen::VectorXd::Constant(nf + 1, ginv);
  k.f_fine.resize(nf + 1, d);
  Eigen::VectorXd lam_pow = Eigen::VectorXd::Ones(d);
  for (int i = 0; i < d; ++i) k.f_fine.col(i) = rho_prev;

  Eigen::VectorXd btpow(nf + 1);  // (b - t_j)^{k alpha}, updated per layer
  for (int j = 0; j <= nf; ++j)
    btpow[j] = std::pow(k.grid_fine.b - k.grid_fine.t(j), alpha);
  Eigen::VectorXd btpow_k = Eigen::VectorXd::Ones(nf + 1);

  Eigen::VectorXd layer_w(nq), prod(nf + 1), rho_cur(nf + 1);
  layer_w = coef_q;
  for (int kk = 1; kk <= k.depth; ++kk) {
    prod = k.g_fine.cwiseProduct(rho_prev);
    for (int j = 0; j <= nf; ++j) {
      const double t = k.grid_fine.t(j);
      const double bt = k.grid_fine.b - t;
      double acc = 0.0;
      for (int q = 0; q < nq; ++q) {
        const double tau = t + bt * xi_q[q];
        acc += layer_w[q] * interp_linear(k.grid_fine, prod, tau);
      }
      rho_cur[j] = ginv * acc;
    }
    if (kk == 1) k.rho1_fine = rho_cur;
    btpow_k = btpow_k.cwiseProduct(btpow);
    for (int i = 0; i < d; ++i) {
      lam_pow[i] *= k.diag.lambda[i];
      if (lam_pow[i] != 0.0)
        k.f_fine.col(i) += lam_pow[i] * btpow_k.cwiseProduct(rho_cur);
    }
    rho_prev = rho_cur;
    layer_w = layer_w.cwiseProduct(one_minus_eta);
  }
  if (k.depth < 1) k.rho1_fine = Eigen::VectorXd::Zero(nf + 1);

  // Remainder table with the leading (b-t)^alpha term removed: consumers
  // that sample F between nodes can add that term back analytically instead
  // of pushing the cusp through linear interpolation.
  k.f_rem_fine = k.f_fine;
  for (int i = 0; i < d; ++i) {
    const double lam = k.diag.lambda[i];
    if (lam != 0.0)
      k.f_rem_fine.col(i) -= lam * btpow.cwiseProduct(k.rho1_fine);
  }

  // Downsample to the working grid (fine nodes contain the working nodes).
  k.psi_d.resize(n + 1, d);
  k.f_d.resize(n + 1, d);
  for (int j = 0; j <= n; ++j) {
    k.psi_d.row(j) = k.psi_fine.row(j * refine);
    k.f_d.row(j) = k.f_fine.row(j * refine);
  }

  return k;
}

BoundsRecord kernel_bounds_report(const TransitionKernels& k) {
  BoundsRecord r;
  r.lambda_min = k.diag.lambda.minCoeff();
  r.lambda_max = k.diag.lambda.maxCoeff();
  r.g_max = k.g_max;
  r.depth = k.depth;
  r.tail_bound_forward = k.tail_bound_forward;
  r.tail_bound_backward = k.tail_bound_backward;
  r.max_term_forward = k.max_term_forward;
  r.dissipative = r.lambda_max <= 0.0;

  // Psi is symmetric with eigenvalues psi_d.row(j): the spectral norm is the
  // largest |entry|.
  r.max_norm_psi = k.psi_d.cwiseAbs().maxCoeff();

  // Lower floor: the scalar comparison solution for the most negative
  // eigenvalue run at the gain ceiling over the whole horizon. Every
  // eigencomponent of Psi decays no faster, so the floor holds at every
  // node; it is attained at t = b when the gain sits at its ceiling.
  double slack = std::numeric_limits<double>::infinity();
  if (r.dissipative) {
    const double arg =
        r.lambda_min * k.g_max * std::pow(k.grid.b - k.grid.a, k.alpha);
    r.lower_floor = special::mittag_leffler_one(k.alpha, arg);
    slack = k.psi_d.minCoeff() - r.lower_floor;
  } else {
    r.lower_floor = 0.0;
    slack = 0.0;
  }
  r.min_envelope_slack = slack;
  r.upper_ok = !r.dissipative || r.max_norm_psi <= 1.0 + 1e-8;
  r.lower_ok = !r.dissipative || slack >= -1e-6;
  return r;
}

}  // namespace fracctrl
