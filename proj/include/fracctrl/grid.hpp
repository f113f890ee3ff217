#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace fracctrl {

// Uniform grid of n panels (n + 1 nodes) on [a, b].
struct Grid {
  double a = 0.0;
  double b = 1.0;
  int n = 1;

  double h() const { return (b - a) / n; }
  int size() const { return n + 1; }
  // t(0) == a and t(n) == b exactly.
  double t(int j) const { return a + (b - a) * (static_cast<double>(j) / n); }
};

// Vector-valued samples on a grid: row j holds the state at node j.
struct Trajectory {
  Grid grid;
  Eigen::MatrixXd states;  // (n + 1) x d

  int dim() const { return static_cast<int>(states.cols()); }
  Eigen::VectorXd at(int j) const { return states.row(j).transpose(); }
  Eigen::VectorXd back() const { return states.row(grid.n).transpose(); }
};

// Piecewise-linear evaluation of scalar samples at an arbitrary point of the
// grid interval (clamped to [a, b]).
inline double interp_linear(const Grid& g, const Eigen::VectorXd& samples, double t) {
  const double h = g.h();
  double s = (t - g.a) / h;
  int j = static_cast<int>(std::floor(s));
  j = std::clamp(j, 0, g.n - 1);
  double theta = std::clamp(s - j, 0.0, 1.0);
  return (1.0 - theta) * samples[j] + theta * samples[j + 1];
}

}  // namespace fracctrl
