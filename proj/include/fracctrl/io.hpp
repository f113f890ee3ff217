#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fracctrl/grid.hpp"

namespace fracctrl {

// Time-series CSV with header "t,y_1,...,y_d,u_1,...,u_N" and 17 significant
// digits per value (round-trips doubles exactly). One row per grid node.
void write_trajectory_csv(const std::string& path, const Grid& grid,
                          const Eigen::MatrixXd& y, const Eigen::MatrixXd& u);

struct TimeSeries {
  std::vector<double> t;
  Eigen::MatrixXd y;  // rows x d
  Eigen::MatrixXd u;  // rows x N
};

// Parse a trajectory CSV produced by write_trajectory_csv (column counts are
// inferred from the header). Throws IoError on missing file, InputError on a
// malformed header or row.
TimeSeries read_trajectory_csv(const std::string& path);

// Write text to a file, creating parent directories; throws IoError when the
// path cannot be written.
void write_text_file(const std::string& path, const std::string& text);

// Read a whole text file; throws IoError when unreadable.
std::string read_text_file(const std::string& path);

// Format a double with 17 significant digits (shortest exact form not
// required; fixed %.17g).
std::string format_g17(double v);

}  // namespace fracctrl
