#include "mazo/quadratic.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mazo/errors.hpp"

namespace mazo {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  // Row-major flat list; shape is recorded separately.
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index rows,
                                 Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw IoError("instance file: matrix payload has wrong length");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr[k++].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

}  // namespace

Eigen::MatrixXd QuadraticSpec::average_a() const {
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ai : A) avg += ai;
  return avg / static_cast<double>(n);
}

Eigen::VectorXd QuadraticSpec::average_b() const {
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(d);
  for (const auto& bi : b) avg += bi;
  return avg / static_cast<double>(n);
}

double QuadraticSpec::average_c() const {
  double avg = 0.0;
  for (double ci : c) avg += ci;
  return avg / static_cast<double>(n);
}

double QuadraticSpec::objective(int i,
                                Eigen::Ref<const Eigen::VectorXd> x) const {
  if (x.size() != d) throw DimensionMismatch("objective: joint point has wrong dimension");
  return x.dot(A[i] * x) + b[i].dot(x) + c[i];
}

double QuadraticSpec::constraint(int i, int j,
                                 Eigen::Ref<const Eigen::VectorXd> xi) const {
  if (xi.size() != dims[i])
    throw DimensionMismatch("constraint: block has wrong dimension");
  return xi.dot(P[i][j] * xi) + q[i][j].dot(xi) + r[i][j];
}

std::string QuadraticSpec::to_json_string() const {
  json out;
  out["format"] = "mazo-quadratic-instance";
  out["version"] = 1;
  out["seed"] = seed;
  out["n"] = n;
  out["m"] = m;
  out["d"] = d;
  out["dims"] = dims;
  out["eig_min"] = eig_min;
  out["eig_max"] = eig_max;
  out["set_radius"] = set_radius;
  out["A"] = json::array();
  out["b"] = json::array();
  out["c"] = c;
  for (int i = 0; i < n; ++i) {
    out["A"].push_back(matrix_to_json(A[i]));
    out["b"].push_back(vector_to_json(b[i]));
  }
  out["P"] = json::array();
  out["q"] = json::array();
  out["r"] = r;
  for (int i = 0; i < n; ++i) {
    json pi = json::array(), qi = json::array();
    for (int j = 0; j < m; ++j) {
      pi.push_back(matrix_to_json(P[i][j]));
      qi.push_back(vector_to_json(q[i][j]));
    }
    out["P"].push_back(pi);
    out["q"].push_back(qi);
  }
  return out.dump(1);
}

QuadraticSpec QuadraticSpec::from_json_string(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("instance file is not valid JSON: ") + e.what());
  }
  if (in.value("format", "") != "mazo-quadratic-instance")
    throw IoError("instance file: unrecognized format tag");
  QuadraticSpec spec;
  spec.seed = in.at("seed").get<std::uint64_t>();
  spec.n = in.at("n").get<int>();
  spec.m = in.at("m").get<int>();
  spec.d = in.at("d").get<int>();
  spec.dims = in.at("dims").get<std::vector<int>>();
  spec.eig_min = in.at("eig_min").get<double>();
  spec.eig_max = in.at("eig_max").get<double>();
  spec.set_radius = in.at("set_radius").get<double>();
  spec.c = in.at("c").get<std::vector<double>>();
  spec.r = in.at("r").get<std::vector<std::vector<double>>>();
  for (int i = 0; i < spec.n; ++i) {
    spec.A.push_back(matrix_from_json(in.at("A").at(i), spec.d, spec.d));
    spec.b.push_back(vector_from_json(in.at("b").at(i)));
  }
  spec.P.resize(spec.n);
  spec.q.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.m; ++j) {
      spec.P[i].push_back(
          matrix_from_json(in.at("P").at(i).at(j), spec.dims[i], spec.dims[i]));
      spec.q[i].push_back(vector_from_json(in.at("q").at(i).at(j)));
    }
  }
  return spec;
}

void QuadraticSpec::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file: " + path);
  out << to_json_string();
  if (!out) throw IoError("write failed: " + path);
}

QuadraticSpec QuadraticSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace mazo
