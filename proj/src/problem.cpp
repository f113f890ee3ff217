#include "fracctrl/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracctrl/errors.hpp"
#include "fracctrl/io.hpp"

namespace fracctrl {

using nlohmann::json;

std::string ScalarField::kind_name(Kind k) {
  switch (k) {
    case Kind::constant:
      return "constant";
    case Kind::gauss_plus:
      return "gauss_plus";
    case Kind::rational_plus:
      return "rational_plus";
  }
  return "constant";
}

ScalarField::Kind ScalarField::kind_from_name(const std::string& name) {
  if (name == "constant") return Kind::constant;
  if (name == "gauss_plus") return Kind::gauss_plus;
  if (name == "rational_plus") return Kind::rational_plus;
  throw InputError("f.kind must be one of \"constant\", \"gauss_plus\", "
                   "\"rational_plus\"; got \"" + name + "\"");
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw InputError(msg); }

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing required field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer())
    fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

Eigen::VectorXd vector_field(const json& j, const char* key, int d) {
  const json& v = require(j, key);
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    fail(std::string("field '") + key + "' must be an array of length " +
         std::to_string(d));
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) {
    if (!v[i].is_number())
      fail(std::string("field '") + key + "' must contain numbers only");
    out[i] = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_field(const json& j, const char* key, int rows,
                             int cols) {
  const json& v = require(j, key);
  if (!v.is_array() || static_cast<int>(v.size()) != rows)
    fail(std::string("field '") + key + "' must be an array of " +
         std::to_string(rows) + " rows");
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = v[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      fail(std::string("field '") + key + "' row " + std::to_string(r) +
           " must be an array of length " + std::to_string(cols));
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        fail(std::string("field '") + key + "' must contain numbers only");
      out(r, c) = row[c].get<double>();
    }
  }
  return out;
}

}  // namespace

ProblemSpec parse_problem_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("problem file must contain a JSON object");

  ProblemSpec spec;
  spec.alpha = number(j, "alpha");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
    fail("alpha must lie strictly between 0 and 1");
  spec.T = number(j, "T");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T)) fail("T must be positive");
  spec.d = integer(j, "d");
  if (spec.d < 1) fail("d must be a positive integer");
  spec.N = integer(j, "N");
  if (spec.N < 1 || spec.N > spec.d) fail("N must satisfy 1 <= N <= d");

  spec.A = matrix_field(j, "A", spec.d, spec.d);
  const double a_scale = 1.0 + spec.A.cwiseAbs().maxCoeff();
  if ((spec.A - spec.A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * a_scale)
    fail("A must be symmetric");
  spec.B = matrix_field(j, "B", spec.d, spec.N);
  spec.y0 = vector_field(j, "y0", spec.d);
  spec.yT = vector_field(j, "yT", spec.d);

  const json& f = require(j, "f");
  if (!f.is_object()) fail("field 'f' must be an object");
  const json& kind = require(f, "kind");
  if (!kind.is_string()) fail("f.kind must be a string");
  spec.f.kind = ScalarField::kind_from_name(kind.get<std::string>());
  spec.f.c1 = number(f, "c1");
  spec.f.c2 = f.contains("c2") ? number(f, "c2") : 0.0;
  if (spec.f.c1 < 0.0) fail("f.c1 must be nonnegative");
  if (spec.f.c2 < 0.0) fail("f.c2 must be nonnegative");
  if (!(spec.f.c1 + spec.f.c2 > 0.0)) fail("f.c1 + f.c2 must be positive");
  if (spec.f.kind == ScalarField::Kind::constant && !(spec.f.c1 > 0.0))
    fail("f.c1 must be positive for the constant gain");

  if (j.contains("numerics")) {
    const json& num = j["numerics"];
    if (!num.is_object()) fail("field 'numerics' must be an object");
    Numerics& n = spec.numerics;
    if (num.contains("n_steps")) n.n_steps = integer(num, "n_steps");
    if (num.contains("pb_tol")) n.pb_tol = number(num, "pb_tol");
    if (num.contains("fp_tol")) n.fp_tol = number(num, "fp_tol");
    if (num.contains("max_iter")) n.max_iter = integer(num, "max_iter");
    if (num.contains("terminal_tol"))
      n.terminal_tol = number(num, "terminal_tol");
    if (num.contains("damping")) n.damping = number(num, "damping");
    if (n.n_steps < 8) fail("numerics.n_steps must be at least 8");
    if (!(n.pb_tol > 0.0)) fail("numerics.pb_tol must be positive");
    if (!(n.fp_tol > 0.0)) fail("numerics.fp_tol must be positive");
    if (n.max_iter < 1) fail("numerics.max_iter must be at least 1");
    if (!(n.terminal_tol > 0.0)) fail("numerics.terminal_tol must be positive");
    if (!(n.damping > 0.0 && n.damping <= 1.0))
      fail("numerics.damping must lie in (0, 1]");
  }

  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (!s.is_number_unsigned() && !s.is_number_integer())
      fail("seed must be a nonnegative integer");
    const long long sv = s.get<long long>();
    if (sv < 0) fail("seed must be a nonnegative integer");
    spec.seed = static_cast<std::uint64_t>(sv);
  }
  return spec;
}

ProblemSpec load_problem(const std::string& path) {
  return parse_problem_text(read_text_file(path));
}

std::string problem_to_json_text(const ProblemSpec& spec) {
  json j;
  j["alpha"] = spec.alpha;
  j["T"] = spec.T;
  j["d"] = spec.d;
  j["N"] = spec.N;
  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  j["A"] = mat(spec.A);
  j["B"] = mat(spec.B);
  j["y0"] = vec(spec.y0);
  j["yT"] = vec(spec.yT);
  j["f"] = {{"kind", ScalarField::kind_name(spec.f.kind)},
            {"c1", spec.f.c1},
            {"c2", spec.f.c2}};
  j["numerics"] = {{"n_steps", spec.numerics.n_steps},
                   {"pb_tol", spec.numerics.pb_tol},
                   {"fp_tol", spec.numerics.fp_tol},
                   {"max_iter", spec.numerics.max_iter},
                   {"terminal_tol", spec.numerics.terminal_tol},
                   {"damping", spec.numerics.damping}};
  if (spec.seed) j["seed"] = *spec.seed;
  return j.dump(2);
}

}  // namespace fracctrl
