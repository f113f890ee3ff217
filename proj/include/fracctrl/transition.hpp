#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "fracctrl/frac_calc.hpp"
#include "fracctrl/grid.hpp"

namespace fracctrl {

// Spectral factorization A = U diag(lambda) U^T of a symmetric matrix,
// eigenvalues ascending, each eigenvector normalized with its first
// nonzero component positive (deterministic sign convention).
struct Diagonalization {
  Eigen::MatrixXd U;
  Eigen::VectorXd lambda;
};

Diagonalization diagonalize(const Eigen::MatrixXd& A);

// State-transition kernels of the linear Caputo system
//   cD_a^alpha y = A g(t) y + forcing,   A symmetric, g scalar,
// realized through the iterated-integral (Peano-Baker type) series in the
// eigenbasis of A. Two kernels are tabulated on the grid:
//
//  * Psi(a, t) = U diag(sum_k lambda_i^k s_k(t)) U^T, where s_0 = 1 and
//    s_k = I_a^alpha (g s_{k-1}) are scalar forward layers shared by all
//    eigencomponents; propagates initial states.
//
//  * F(t) = (b - t)^{1-alpha} Phi(t, b), the regularized terminal kernel of
//    the variation-of-constants formula, F(t) = U diag(sum_k lambda_i^k
//    m_k(t)) U^T with m_0 = 1/Gamma(alpha) and
//      m_k(t) = (b-t)^alpha / Gamma(alpha) *
//               integral_0^1 xi^{alpha-1} (1-xi)^{alpha-1}
//                            (g m_{k-1})(t + (b-t) xi) dxi,
//    evaluated with a Gauss-Jacobi rule. F(b) = I / Gamma(alpha) exactly.
//
// The series is truncated at depth K chosen so the Mittag-Leffler majorant
// tail sum_{k>K} (lambda_max M Delta^alpha)^k / Gamma(k alpha + 1) drops
// below tol; the realized tails are reported.
//
// Both tables are computed on an internally refined tabulation grid
// (`refine` times finer than the working grid) and downsampled to the
// working nodes. The layer recursions converge like h^(1+alpha) near the
// interval ends, so refining the tabulation grid buys roughly a decade of
// accuracy at modest cost; the fine tables are kept because the weighted
// quadratures of the control layer (Gramian, pairings, adjoint initial
// value) gain the same factor when they integrate the fine samples.
struct TransitionKernels {
  Grid grid;
  double alpha = 0.5;
  double tol = 1e-10;
  Diagonalization diag;       // of the dynamics matrix A
  Eigen::VectorXd g;          // coefficient samples at working-grid nodes
  double g_max = 1.0;         // M = sup |g|
  int depth = 0;              // K: layers 1..K beyond the identity layer
  double tail_bound_forward = 0.0;
  double tail_bound_backward = 0.0;
  double max_term_forward = 0.0;  // largest series term met (conditioning witness)

  int refine = 1;             // tabulation-grid refinement factor
  Grid grid_fine;             // tabulation grid, refine * n steps
  Eigen::VectorXd g_fine;     // coefficient samples at tabulation nodes

  std::vector<Eigen::VectorXd> s;  // forward layers s_k on grid_fine, k = 0..K
  Eigen::MatrixXd psi_d;           // (n+1) x d eigenvalues of Psi(a, t_j)
  Eigen::MatrixXd f_d;             // (n+1) x d eigenvalues of F(t_j)
  Eigen::MatrixXd psi_fine;        // tabulation-grid counterparts of psi_d
  Eigen::MatrixXd f_fine;          // ... and of f_d
  // Split of F for quadratures that cannot tolerate the (b-t)^alpha cusp of
  // F at t = b under linear interpolation: F_i(t) = f_rem_fine_i(t) +
  // lambda_i (b-t)^alpha rho1_fine(t), with rho1 the regular part of the
  // first backward layer (smooth through t = b) and f_rem carrying only
  // O((b-t)^{2 alpha}) end behavior.
  Eigen::VectorXd rho1_fine;
  Eigen::MatrixXd f_rem_fine;
  std::shared_ptr<LeftIntegralOp> iop;  // working-grid product-integration op

  int dim() const { return static_cast<int>(diag.lambda.size()); }
  Eigen::MatrixXd psi(int j) const;   // Psi(a, t_j)
  Eigen::MatrixXd F(int j) const;     // regularized terminal kernel at t_j
  Eigen::MatrixXd psi_ab() const { return psi(grid.n); }

  // q(t) = integral_a^t Phi(s, t) p(s) ds for sampled p ((n+1) x d), via the
  // nested-operator form q = sum_k A^k (I^alpha g .)^k (I^alpha p), evaluated
  // per eigencomponent; O(K n^2) per component.
  Eigen::MatrixXd phi_action(const Eigen::MatrixXd& p) const;

  // F(t_j) v for all j without forming matrices: returns (n+1) x d samples.
  Eigen::MatrixXd f_apply(const Eigen::VectorXd& v) const;
  // Same, on the tabulation grid: (refine*n+1) x d samples.
  Eigen::MatrixXd f_apply_fine(const Eigen::VectorXd& v) const;
};

TransitionKernels build_kernels(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& g_samples,
                                const Grid& grid, double alpha, double tol,
                                int refine = 4);

// Summary of the two-sided envelope checks on the tabulated kernels, for
// dissipative dynamics (all eigenvalues of A nonpositive):
//   upper: ||Psi(a,t)||_2 <= 1 (spectral norm) at every node,
//   lower: min_i Psi_ii(t) >= E_alpha(lambda_min M (b-a)^alpha) at every
//   node -- the comparison floor of the slowest admissible decay run over
//   the whole horizon, so it bounds every eigencomponent at every time.
struct BoundsRecord {
  double lambda_min = 0.0, lambda_max = 0.0;  // of A
  double g_max = 1.0;
  int depth = 0;
  double tail_bound_forward = 0.0, tail_bound_backward = 0.0;
  double max_term_forward = 0.0;
  double max_norm_psi = 0.0;       // max_j ||Psi(a, t_j)||_2
  double lower_floor = 0.0;        // E_alpha(lambda_min M (b-a)^alpha)
  double min_envelope_slack = 0.0; // min_{i,j} Psi_ii(t_j) - lower_floor
  bool upper_ok = false;           // max_norm_psi <= 1 + 1e-8 (dissipative only)
  bool lower_ok = false;           // min_envelope_slack >= -1e-6
  bool dissipative = false;        // all eigenvalues <= 0
};

BoundsRecord kernel_bounds_report(const TransitionKernels& k);

}  // namespace fracctrl
