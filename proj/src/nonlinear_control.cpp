#include "fracctrl/nonlinear_control.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fracctrl/errors.hpp"
#include "fracctrl/frac_ode.hpp"
#include "fracctrl/quadrature.hpp"
#include "fracctrl/special_functions.hpp"

namespace fracctrl {

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()[0];
}

double max_row_norm(const Eigen::MatrixXd& rows) {
  double m = 0.0;
  for (int j = 0; j < rows.rows(); ++j) m = std::max(m, rows.row(j).norm());
  return m;
}

}  // namespace

Trajectory solve_caputo_nonlinear(const Eigen::MatrixXd& A, const ScalarField& f,
                                  const Eigen::VectorXd& y0, const Grid& grid,
                                  double alpha) {
  const Rhs rhs = [&A, &f](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return -(f(y) * (A * y));
  };
  return solve_caputo_abm(rhs, y0, grid, alpha);
}

SplitConstants compute_split_constants(const Trajectory& v, const ScalarField& f,
                                       double alpha, double T,
                                       const Trajectory& coast) {
  SplitConstants sc;
  sc.M_v = 0.0;
  for (int j = 0; j < v.states.rows(); ++j)
    sc.M_v = std::max(sc.M_v, f(v.states.row(j).transpose()));
  const double m = std::max(1.0, sc.M_v);
  sc.K_v = std::pow(m, 1.0 / alpha);
  sc.T_v = T * (1.0 - 1.0 / m);

  sc.K_z = 0.0;
  const Grid& g = coast.grid;
  const double h = g.h();
  for (int j = 0; j < g.n; ++j) {
    const double slope =
        (coast.states.row(j + 1) - coast.states.row(j)).norm() / h;
    const double tmid = 0.5 * (g.t(j) + g.t(j + 1)) - g.a;
    sc.K_z = std::max(sc.K_z, std::pow(tmid, 1.0 - alpha) * slope);
  }
  return sc;
}

Eigen::MatrixXd memory_term(const Trajectory& z, int split_index, double alpha,
                            const std::vector<double>& eval_ts) {
  const int d = z.dim();
  const int ne = static_cast<int>(eval_ts.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ne, d);
  if (split_index <= 0) return out;

  const Grid& g = z.grid;
  const double h = g.h();
  const double one_minus = 1.0 - alpha;
  const double pref = 1.0 / special::gamma(1.0 - alpha);

  // Panel slopes of the piecewise-linear history.
  Eigen::MatrixXd slopes(split_index, d);
  for (int j = 0; j < split_index; ++j)
    slopes.row(j) = (z.states.row(j + 1) - z.states.row(j)) / h;

  // Fractional startup profile z(s) ~ z(a) + c ((s-a)/1)^alpha on the first
  // panel, matched at the first node; its derivative mass is integrated with
  // a Gauss-Jacobi rule in the profile weight.
  const Eigen::RowVectorXd c_first = z.states.row(1) - z.states.row(0);
  const quad::Rule prof = quad::gauss_jacobi01(8, alpha - 1.0, 0.0);
  const int npq = static_cast<int>(prof.nodes.size());

  for (int e = 0; e < ne; ++e) {
    const double t = eval_ts[e];
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int j = 0; j < split_index; ++j) {
      const double sj = g.t(j);
      const double sj1 = g.t(j + 1);
      if (j == 0 && t - sj1 >= 0.5 * h) {
        // Profile-weighted first panel: h^alpha factors cancel against c.
        double q = 0.0;
        const double tau = t - g.a;
        for (int k = 0; k < npq; ++k)
          q += prof.weights[k] * std::pow(tau - h * prof.nodes[k], -alpha);
        acc += c_first * (alpha * q);
        continue;
      }
      const double d0 = std::max(0.0, t - sj);
      const double d1 = std::max(0.0, t - sj1);
      const double w =
          (std::pow(d0, one_minus) - std::pow(d1, one_minus)) / one_minus;
      acc += slopes.row(j) * w;
    }
    out.row(e) = pref * acc;
  }
  return out;
}

Eigen::MatrixXd solve_yp(const TransitionKernels& k, const Eigen::MatrixXd& h) {
  return -k.phi_action(h);
}

AssembledIterate assemble_iterate(const Trajectory& v, const ProblemSpec& spec,
                                  const Trajectory& coast, double K_z) {
  const Grid& grid = v.grid;
  const int n = grid.n;
  const double h = grid.h();
  const double alpha = spec.alpha;

  AssembledIterate out;
  IterationRecord& rec = out.record;
  rec.sc = compute_split_constants(v, spec.f, alpha, spec.T, coast);
  rec.sc.K_z = K_z;

  int split = 0;
  if (rec.sc.T_v > 0.0)
    split = static_cast<int>(std::floor(rec.sc.T_v / h + 1e-12));
  if (split > 0 && n - split < 2)
    throw InputError(
        "control window shorter than two time steps after the split; "
        "increase n_steps or shorten the horizon");
  rec.split_index = split;

  const int nw = n - split;
  Grid wgrid{grid.t(split), grid.b, nw};

  Eigen::VectorXd gain(nw + 1);
  for (int j = 0; j <= nw; ++j)
    gain[j] = spec.f(v.states.row(split + j).transpose());

  const TransitionKernels kern = build_kernels(
      -spec.A, gain, wgrid, alpha, spec.numerics.pb_tol);

  Eigen::MatrixXd hmem = Eigen::MatrixXd::Zero(nw + 1, spec.d);
  Eigen::MatrixXd yp = Eigen::MatrixXd::Zero(nw + 1, spec.d);
  if (split > 0) {
    std::vector<double> ts(nw + 1);
    for (int j = 0; j <= nw; ++j) ts[j] = wgrid.t(j);
    hmem = memory_term(coast, split, alpha, ts);
    yp = solve_yp(kern, hmem);
  }

  const Eigen::VectorXd y0_eff = coast.states.row(split).transpose();
  const Eigen::VectorXd yb_eff = spec.yT - yp.row(nw).transpose();

  const Gramian gram = gramian(kern, spec.B);
  rec.gram_lambda_min = gram.lambda_min;
  rec.gram_lambda_max = gram.lambda_max;

  out.zhat = minimizer_zb(gram, kern.psi_ab(), y0_eff, yb_eff);
  const Eigen::MatrixXd uw = kern.f_apply(out.zhat) * spec.B;
  const Eigen::MatrixXd yw =
      apply_control(kern, spec.B, uw, y0_eff).states + yp;

  out.y.grid = grid;
  out.y.states.resize(n + 1, spec.d);
  out.u = Eigen::MatrixXd::Zero(n + 1, spec.N);
  for (int j = 0; j < split; ++j) out.y.states.row(j) = coast.states.row(j);
  out.y.states.bottomRows(nw + 1) = yw;
  out.u.bottomRows(nw + 1) = uw;

  rec.terminal_error = (out.y.back() - spec.yT).norm();

  // Audited bounds of the construction.
  const double gam_a = special::gamma(alpha);
  const double Ta = std::pow(spec.T, alpha);
  const double Kva = std::pow(rec.sc.K_v, alpha);
  const double nrm_B = spectral_norm(spec.B);
  const double nrm_Bt = spectral_norm(spec.B.transpose());
  const double nrm_A = spectral_norm(spec.A);
  const double y_scale = spec.yT.norm() + spec.y0.norm();

  out.c_w = gram.lambda_min * Kva;
  out.C_u = out.c_w > 0.0 ? nrm_Bt * y_scale / out.c_w
                          : std::numeric_limits<double>::infinity();
  out.C_y = spec.y0.norm() + nrm_B * out.C_u * Ta;
  out.C_T = spec.yT.norm() + K_z * gam_a * Ta / alpha;
  out.C_alpha = (nrm_A * out.C_y + nrm_B * out.C_u) * Kva;

  rec.audit_h = {max_row_norm(hmem), K_z * gam_a * (1.0 + 1e-6), false};
  rec.audit_yp = {max_row_norm(yp), K_z * gam_a * Ta / alpha, false};
  rec.audit_u2 = {max_row_norm(uw), out.C_u * Kva * (1.0 + 1e-6), false};
  rec.audit_y = {max_row_norm(out.y.states), out.C_y, false};
  rec.audit_ycT = {yb_eff.norm(), out.C_T, false};

  double dmax = 0.0;
  for (int j = split; j <= n; ++j) {
    const Eigen::VectorXd yj = out.y.states.row(j).transpose();
    const Eigen::VectorXd rhs =
        -(gain[j - split] * (spec.A * yj)) + spec.B * out.u.row(j).transpose();
    dmax = std::max(dmax, rhs.norm());
  }
  rec.audit_dcaputo = {dmax, out.C_alpha, false};

  for (AuditEntry* a : {&rec.audit_h, &rec.audit_yp, &rec.audit_u2,
                        &rec.audit_y, &rec.audit_ycT, &rec.audit_dcaputo})
    a->pass = a->value <= a->bound;

  return out;
}

SynthesisResult fixed_point_solve(const ProblemSpec& spec) {
  // Preconditions checked before any iteration work: A symmetric positive
  // semidefinite, (A, B) controllable in the Kalman sense, gain positive.
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.A);
    const double lam_min = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (lam_min < -1e-10 * scale)
      throw InputError("A must be positive semidefinite");
    const KalmanReport kal = kalman_rank(spec.A, spec.B);
    if (!kal.controllable) {
      throw NotControllableError(
          "system is not controllable: Kalman rank " +
          std::to_string(kal.rank) + " < state dimension " +
          std::to_string(static_cast<long long>(spec.A.rows())));
    }
  }
  const Grid grid{0.0, spec.T, spec.numerics.n_steps};
  const Trajectory coast =
      solve_caputo_nonlinear(spec.A, spec.f, spec.y0, grid, spec.alpha);
  const double K_z =
      compute_split_constants(coast, spec.f, spec.alpha, spec.T, coast).K_z;

  SynthesisResult res;
  Trajectory v = coast;
  double omega = spec.numerics.damping;
  double prev_norm = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (int it = 1; it <= spec.numerics.max_iter; ++it) {
    AssembledIterate ai = assemble_iterate(v, spec, coast, K_z);
    ai.record.iteration = it;
    ai.record.omega = omega;

    double update_norm = 0.0;
    double v_norm = 0.0;
    for (int j = 0; j <= grid.n; ++j) {
      update_norm = std::max(
          update_norm, (ai.y.states.row(j) - v.states.row(j)).norm());
      v_norm = std::max(v_norm, v.states.row(j).norm());
    }
    ai.record.update_norm = update_norm;
    res.records.push_back(ai.record);

    res.y = ai.y;
    res.u = ai.u;
    res.zhat = ai.zhat;
    res.sc = ai.record.sc;
    res.split_index = ai.record.split_index;
    res.terminal_error = ai.record.terminal_error;
    res.gram_lambda_min = ai.record.gram_lambda_min;
    res.gram_lambda_max = ai.record.gram_lambda_max;
    res.C_T = ai.C_T;
    res.C_u = ai.C_u;
    res.C_y = ai.C_y;
    res.C_alpha = ai.C_alpha;
    res.c_w = ai.c_w;

    if (update_norm <= spec.numerics.fp_tol * (1.0 + v_norm)) {
      res.converged = true;
      break;
    }

    if (update_norm > prev_norm) {
      if (++growth_streak >= 2) omega = std::min(omega, 0.5);
    } else {
      growth_streak = 0;
    }
    prev_norm = update_norm;
    v.states += omega * (ai.y.states - v.states);
  }

  res.iterations = static_cast<int>(res.records.size());

  // Control energy over the active window (plain L2).
  double l2sq = 0.0;
  for (int j = res.split_index; j < grid.n; ++j)
    l2sq += 0.5 * grid.h() *
            (res.u.row(j).squaredNorm() + res.u.row(j + 1).squaredNorm());
  res.l2_norm_u = std::sqrt(std::max(0.0, l2sq));
  return res;
}

}  // namespace fracctrl
