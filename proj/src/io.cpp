#include "fracctrl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracctrl/errors.hpp"

namespace fracctrl {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void create_parents(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    // A failure here surfaces as an unwritable file below.
  }
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
  create_parents(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed while reading '" + path + "'");
  return ss.str();
}

void write_trajectory_csv(const std::string& path, const Grid& grid,
                          const Eigen::MatrixXd& y, const Eigen::MatrixXd& u) {
  const int n = grid.n;
  if (y.rows() != n + 1 || u.rows() != n + 1)
    throw InputError("trajectory CSV: row count does not match the grid");
  std::ostringstream out;
  out << "t";
  for (int c = 0; c < y.cols(); ++c) out << ",y_" << (c + 1);
  for (int c = 0; c < u.cols(); ++c) out << ",u_" << (c + 1);
  out << "\n";
  for (int j = 0; j <= n; ++j) {
    out << format_g17(grid.t(j));
    for (int c = 0; c < y.cols(); ++c) out << "," << format_g17(y(j, c));
    for (int c = 0; c < u.cols(); ++c) out << "," << format_g17(u(j, c));
    out << "\n";
  }
  write_text_file(path, out.str());
}

TimeSeries read_trajectory_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw InputError("trajectory CSV '" + path + "': empty file");

  int d = 0, N = 0;
  {
    std::istringstream hs(line);
    std::string col;
    int idx = 0;
    while (std::getline(hs, col, ',')) {
      if (idx == 0) {
        if (col != "t")
          throw InputError("trajectory CSV '" + path +
                           "': first column must be 't'");
      } else if (col.rfind("y_", 0) == 0) {
        ++d;
      } else if (col.rfind("u_", 0) == 0) {
        ++N;
      } else {
        throw InputError("trajectory CSV '" + path +
                         "': unexpected column '" + col + "'");
      }
      ++idx;
    }
    if (d == 0)
      throw InputError("trajectory CSV '" + path + "': no state columns");
  }

  TimeSeries ts;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("trajectory CSV '" + path + "' line " +
                         std::to_string(lineno) + ": bad number '" + cell +
                         "'");
      }
    }
    if (static_cast<int>(row.size()) != 1 + d + N)
      throw InputError("trajectory CSV '" + path + "' line " +
                       std::to_string(lineno) + ": expected " +
                       std::to_string(1 + d + N) + " columns, got " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  const int m = static_cast<int>(rows.size());
  if (m < 2)
    throw InputError("trajectory CSV '" + path +
                     "': need at least two data rows");
  ts.t.resize(m);
  ts.y.resize(m, d);
  ts.u.resize(m, N);
  for (int j = 0; j < m; ++j) {
    ts.t[j] = rows[j][0];
    for (int c = 0; c < d; ++c) ts.y(j, c) = rows[j][1 + c];
    for (int c = 0; c < N; ++c) ts.u(j, c) = rows[j][1 + d + c];
  }
  return ts;
}

}  // namespace fracctrl
