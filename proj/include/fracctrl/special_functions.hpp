#pragma once

namespace fracctrl::special {

// Gamma function for real non-pole arguments (Lanczos approximation with
// reflection below 0.5). Relative accuracy better than 1e-12 on (0, 171).
// Throws std::domain_error at the poles x = 0, -1, -2, ...
double gamma(double x);

// log Gamma(x) for x > 0; valid for all positive x without overflow.
double log_gamma(double x);

// 1/Gamma(x) for any real x; entire, equals 0 at the poles.
double reciprocal_gamma(double x);

// Euler beta B(x, y) for x, y > 0.
double beta(double x, double y);

// Two-parameter Mittag-Leffler function E_{alpha,beta}(x) for real x.
//
// Supported envelope: alpha in (0, 2], beta in (0, 2], |x| <= ~100 with
// absolute accuracy ~max(tol, 5e-13) for alpha <= 1. Evaluation strategy:
//   * x == 0: 1/Gamma(beta).
//   * alpha == 1: confluent-hypergeometric form, cancellation-free for x < 0.
//   * x > 0 or well-conditioned cases: Kahan-compensated Taylor series with a
//     running largest-term witness; the series is rejected when the predicted
//     cancellation loss exceeds the target tolerance.
//   * ill-conditioned negative arguments (0 < alpha < 1): integral
//     representation over the branch cut, after an upward recurrence in beta
//     reduces to beta <= 1.
//   * alpha in (1, 2]: Taylor series only (mild cancellation in the supported
//     envelope).
// Returns +infinity when the true value overflows double range.
double mittag_leffler(double alpha, double beta, double x, double tol = 1e-12);

struct MlQuery {
  double alpha;
  double beta = 1.0;
  double x = 0.0;
  double tol = 1e-12;
};
double mittag_leffler(const MlQuery& q);

// One-parameter convenience: E_alpha(x) = E_{alpha,1}(x).
inline double mittag_leffler_one(double alpha, double x, double tol = 1e-12) {
  return mittag_leffler(alpha, 1.0, x, tol);
}

}  // namespace fracctrl::special
