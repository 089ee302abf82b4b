#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mazo {

// Data of the randomly generated quadratic test problem:
//   f_i(x)    = x^T A_i x + b_i^T x + c_i          over the joint x,
//   g_ij(x^i) = (x^i)^T P_ij x^i + q_ij^T x^i + r_ij over agent i's block.
// Matrices are stored explicitly so an instance file reproduces evaluations
// bit-exactly.
struct QuadraticSpec {
  std::uint64_t seed = 0;
  int n = 0;
  int m = 0;
  int d = 0;
  std::vector<int> dims;
  double eig_min = 0.0;
  double eig_max = 0.0;
  double set_radius = 0.0;  // all action sets are origin-centered balls

  std::vector<Eigen::MatrixXd> A;  // n matrices, d x d symmetric PD
  std::vector<Eigen::VectorXd> b;  // n vectors, length d
  std::vector<double> c;           // n scalars
  // Indexed [agent][constraint].
  std::vector<std::vector<Eigen::MatrixXd>> P;  // d_i x d_i symmetric PD
  std::vector<std::vector<Eigen::VectorXd>> q;  // length d_i
  std::vector<std::vector<double>> r;

  Eigen::MatrixXd average_a() const;
  Eigen::VectorXd average_b() const;
  double average_c() const;

  double objective(int i, Eigen::Ref<const Eigen::VectorXd> x) const;
  double constraint(int i, int j, Eigen::Ref<const Eigen::VectorXd> xi) const;

  std::string to_json_string() const;
  static QuadraticSpec from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static QuadraticSpec load(const std::string& path);
};

}  // namespace mazo
