#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

namespace fracctrl {

// Scalar gain field f(y) from the closed catalogue; positive by construction.
struct ScalarField {
  enum class Kind { constant, gauss_plus, rational_plus };
  Kind kind = Kind::constant;
  double c1 = 1.0;
  double c2 = 0.0;

  double operator()(const Eigen::VectorXd& y) const {
    switch (kind) {
      case Kind::constant:
        return c1;
      case Kind::gauss_plus:
        return c1 + c2 * std::exp(-y.squaredNorm());
      case Kind::rational_plus:
        return c1 + c2 / (1.0 + y.squaredNorm());
    }
    return c1;
  }

  // Supremum of f over all states.
  double max_value() const {
    return kind == Kind::constant ? c1 : c1 + c2;
  }

  static std::string kind_name(Kind k);
  static Kind kind_from_name(const std::string& name);
};

struct Numerics {
  int n_steps = 2000;
  double pb_tol = 1e-10;      // transition-series truncation tolerance
  double fp_tol = 1e-6;       // fixed-point stopping tolerance
  int max_iter = 50;
  double terminal_tol = 1e-3; // relative terminal accuracy requirement
  double damping = 1.0;       // fixed-point relaxation factor
};

// Terminal-control problem for cD^alpha y = -A f(y) y + B u on [0, T],
// steering y(0) = y0 to y(T) = yT. A must be symmetric (it is diagonalized);
// dissipativity holds when A is positive semidefinite.
struct ProblemSpec {
  double alpha = 0.5;
  double T = 1.0;
  int d = 1;
  int N = 1;
  Eigen::MatrixXd A;  // d x d, symmetric
  Eigen::MatrixXd B;  // d x N
  Eigen::VectorXd y0;
  Eigen::VectorXd yT;
  ScalarField f;
  Numerics numerics;
  std::optional<std::uint64_t> seed;  // echoed into reports
};

// Parse + validate a JSON problem file. Throws IoError when the file cannot
// be read, InputError with a field-specific diagnostic otherwise.
ProblemSpec load_problem(const std::string& path);

// Parse + validate from JSON text (same diagnostics).
ProblemSpec parse_problem_text(const std::string& json_text);

// Serialize back to the canonical JSON layout.
std::string problem_to_json_text(const ProblemSpec& spec);

}  // namespace fracctrl
