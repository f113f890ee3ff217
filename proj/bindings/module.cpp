#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "fracctrl/errors.hpp"
#include "fracctrl/frac_calc.hpp"
#include "fracctrl/linear_control.hpp"
#include "fracctrl/nonlinear_control.hpp"
#include "fracctrl/problem.hpp"
#include "fracctrl/quadrature.hpp"
#include "fracctrl/special_functions.hpp"
#include "fracctrl/transition.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

Eigen::VectorXd grid_times(const fracctrl::Grid& g) {
  Eigen::VectorXd t(g.n + 1);
  for (int j = 0; j <= g.n; ++j) t[j] = g.t(j);
  return t;
}

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

fracctrl::Side side_from(const std::string& s) {
  if (s == "left") return fracctrl::Side::left;
  if (s == "right") return fracctrl::Side::right;
  throw fracctrl::InputError("side must be \"left\" or \"right\"");
}

fracctrl::DerivKind kind_from(const std::string& s) {
  if (s == "caputo_left") return fracctrl::DerivKind::caputo_left;
  if (s == "rl_right") return fracctrl::DerivKind::rl_right;
  throw fracctrl::InputError("kind must be \"caputo_left\" or \"rl_right\"");
}

py::dict run_linear_py(const std::string& problem_json) {
  const fracctrl::ProblemSpec spec = fracctrl::parse_problem_text(problem_json);
  const fracctrl::Grid grid{0.0, spec.T, spec.numerics.n_steps};
  const double g0 = spec.f(spec.y0);
  const Eigen::VectorXd gain = Eigen::VectorXd::Constant(grid.n + 1, g0);
  const fracctrl::TransitionKernels kern = fracctrl::build_kernels(
      -spec.A, gain, grid, spec.alpha, spec.numerics.pb_tol);
  const fracctrl::LinearSynthesis s =
      fracctrl::synthesize_linear(kern, spec.B, spec.y0, spec.yT);
  json rep = {{"model", "linear"},
              {"converged", true},
              {"terminal_error", s.steering_error},
              {"l2_norm_u", s.l2_norm_u},
              {"energy_weighted", s.energy_weighted},
              {"pairing", s.pairing},
              {"el_residual", s.el_residual},
              {"gram_lambda_min", s.gram.lambda_min},
              {"gram_lambda_max", s.gram.lambda_max},
              {"zhat", vec_json(s.zhat)}};
  py::dict out;
  out["t"] = grid_times(grid);
  out["y"] = s.y.states;
  out["u"] = s.u;
  out["report_json"] = rep.dump();
  return out;
}

py::dict run_nonlinear_py(const std::string& problem_json) {
  const fracctrl::ProblemSpec spec = fracctrl::parse_problem_text(problem_json);
  const fracctrl::Grid grid{0.0, spec.T, spec.numerics.n_steps};
  const fracctrl::SynthesisResult res = fracctrl::fixed_point_solve(spec);
  json rep = {{"model", "nonlinear"},
              {"converged", res.converged},
              {"iterations", res.iterations},
              {"terminal_error", res.terminal_error},
              {"l2_norm_u", res.l2_norm_u},
              {"split_index", res.split_index},
              {"M_v", res.sc.M_v},
              {"K_v", res.sc.K_v},
              {"T_v", res.sc.T_v},
              {"K_z", res.sc.K_z},
              {"gram_lambda_min", res.gram_lambda_min},
              {"gram_lambda_max", res.gram_lambda_max},
              {"zhat", vec_json(res.zhat)}};
  py::dict out;
  out["t"] = grid_times(grid);
  out["y"] = res.y.states;
  out["u"] = res.u;
  out["report_json"] = rep.dump();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Minimum-energy terminal control of Caputo fractional systems";

  py::register_exception<fracctrl::InputError>(m, "InputError",
                                               PyExc_ValueError);
  py::register_exception<fracctrl::NotControllableError>(
      m, "NotControllableError", PyExc_RuntimeError);
  py::register_exception<fracctrl::NonConvergenceError>(
      m, "NonConvergenceError", PyExc_RuntimeError);
  py::register_exception<fracctrl::IoError>(m, "IoError", PyExc_OSError);

  m.def("gamma", &fracctrl::special::gamma, py::arg("x"),
        "Gamma function (Lanczos approximation with reflection)");
  m.def("log_gamma", &fracctrl::special::log_gamma, py::arg("x"),
        "log |Gamma(x)| for x > 0");
  m.def("rgamma", &fracctrl::special::reciprocal_gamma, py::arg("x"),
        "entire reciprocal Gamma function 1/Gamma(x)");
  m.def("beta", &fracctrl::special::beta, py::arg("a"), py::arg("b"),
        "Euler Beta function");
  m.def(
      "ml",
      [](double alpha, double x, double beta, double tol) {
        return fracctrl::special::mittag_leffler(alpha, beta, x, tol);
      },
      py::arg("alpha"), py::arg("x"), py::arg("beta") = 1.0,
      py::arg("tol") = 1e-12,
      "two-parameter Mittag-Leffler function E_{alpha,beta}(x)");
  m.def(
      "gauss_jacobi",
      [](int n, double p, double q) {
        const fracctrl::quad::Rule r = fracctrl::quad::gauss_jacobi01(n, p, q);
        return py::make_tuple(r.nodes, r.weights);
      },
      py::arg("n"), py::arg("p"), py::arg("q"),
      "Gauss-Jacobi rule on [0, 1] with weight x^p (1-x)^q");
  m.def(
      "frac_integral",
      [](const Eigen::MatrixXd& samples, double a, double b, double alpha,
         const std::string& side) {
        const fracctrl::Grid grid{a, b, static_cast<int>(samples.rows()) - 1};
        return fracctrl::frac_integral(samples, grid, alpha, side_from(side));
      },
      py::arg("samples"), py::arg("a"), py::arg("b"), py::arg("alpha"),
      py::arg("side") = "left",
      "Riemann-Liouville fractional integral of uniformly sampled data "
      "(product-trapezoid rule); samples has one row per node");
  m.def(
      "frac_derivative",
      [](const Eigen::MatrixXd& samples, double a, double b, double alpha,
         const std::string& kind) {
        const fracctrl::Grid grid{a, b, static_cast<int>(samples.rows()) - 1};
        Eigen::MatrixXd out(samples.rows(), samples.cols());
        for (Eigen::Index c = 0; c < samples.cols(); ++c)
          out.col(c) = fracctrl::frac_derivative(samples.col(c), grid, alpha,
                                                 kind_from(kind));
        return out;
      },
      py::arg("samples"), py::arg("a"), py::arg("b"), py::arg("alpha"),
      py::arg("kind") = "caputo_left",
      "fractional derivative of sampled data: left Caputo (L1 scheme) or "
      "right Riemann-Liouville");
  m.def("run_linear", &run_linear_py, py::arg("problem_json"),
        "minimum-energy steering with the gain frozen at f(y0); returns a "
        "dict with t, y, u and report_json");
  m.def("run_nonlinear", &run_nonlinear_py, py::arg("problem_json"),
        "two-phase damped fixed-point synthesis; returns a dict with t, y, u "
        "and report_json");
}
