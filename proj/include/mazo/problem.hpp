#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "mazo/quadratic.hpp"
#include "mazo/sets.hpp"

namespace mazo {

// Smoothness / Lipschitz data of an instance. For quadratic instances these
// are computed in closed form over the compact action sets and deliberately
// over-approximate the sampled ratios.
struct InstanceConstants {
  double M0 = 0.0;     // Lipschitz bound of every f_i over the joint set
  double L0 = 0.0;     // smoothness bound of every f_i
  double Mg = 0.0;     // sqrt(sum_i M_i^2)
  double Lg = 0.0;     // sqrt(sum_i L_i^2)
  double L_max = 0.0;  // max_i L_i
  double Z = 0.0;      // sup ||g_i|| over the action sets
  double C = 0.0;      // dual-norm bound; 0 means "not calibrated yet"
  double R_bar = 0.0;  // sqrt(sum_i R_i^2)
  std::vector<double> M_i, L_i, R_i;
};

// Immutable problem description. Evaluators must be pure so one instance can
// be shared read-only across parallel trial workers.
struct ProblemInstance {
  int n = 0;
  int m = 0;
  int d = 0;
  std::vector<int> dims;
  std::vector<int> offsets;  // block starts within the joint vector
  std::vector<FeasibleSet> sets;

  // f_i evaluated at the joint action profile.
  std::function<double(int, Eigen::Ref<const Eigen::VectorXd>)> objective;
  // All f_i at once (the simulator's per-round fast path).
  std::function<void(Eigen::Ref<const Eigen::VectorXd>,
                     Eigen::Ref<Eigen::VectorXd>)>
      objective_all;
  // g_i(x^i) as an m-vector.
  std::function<void(int, Eigen::Ref<const Eigen::VectorXd>,
                     Eigen::Ref<Eigen::VectorXd>)>
      constraint_vec;
  // Single g_ij(x^i).
  std::function<double(int, int, Eigen::Ref<const Eigen::VectorXd>)> constraint;

  InstanceConstants consts;
  std::shared_ptr<const QuadraticSpec> quad;  // null for black-box instances

  Eigen::Ref<const Eigen::VectorXd> block(
      Eigen::Ref<const Eigen::VectorXd> x, int i) const {
    return x.segment(offsets[i], dims[i]);
  }
};

// (1/n) sum_i f_i(x). Throws DimensionMismatch on a wrong-sized point.
double global_objective(const ProblemInstance& inst,
                        Eigen::Ref<const Eigen::VectorXd> x);

// sum_i g_i(x^i) as an m-vector.
Eigen::VectorXd coupled_constraint_sum(const ProblemInstance& inst,
                                       Eigen::Ref<const Eigen::VectorXd> x);

// || [ sum_i g_i(x^i) ]_+ ||_2.
double constraint_violation(const ProblemInstance& inst,
                            Eigen::Ref<const Eigen::VectorXd> x);

// Wraps a quadratic spec into a full instance with closed-form constants.
ProblemInstance make_instance(std::shared_ptr<const QuadraticSpec> spec);

// Splits d into n nearly equal block dimensions.
std::vector<int> default_dims(int n, int d);

struct GeneratorOptions {
  double set_radius = 2.0;
  double b_scale = 3.0;  // std-dev of linear objective coefficients
  double c_scale = 1.0;
  double slater_ball_radius = 0.1;
  int slater_samples = 256;
  int retry_budget = 16;
};

struct GeneratedProblem {
  ProblemInstance instance;
  std::shared_ptr<const QuadraticSpec> spec;
};

// Random quadratic instance: average objective curvature rescaled into
// eig_range, each P_ij PD with spectrum inside eig_range, constraint offsets
// shifted so a ball of radius slater_ball_radius around the origin is
// strictly feasible. Throws InfeasibleInstance if the sampled Slater check
// fails within the retry budget.
GeneratedProblem generate_quadratic(std::uint64_t seed, int n,
                                    std::vector<int> dims, int m,
                                    double eig_min, double eig_max,
                                    const GeneratorOptions& opts = {});

// Sampled constant estimation for black-box instances (safety-factor
// inflated). Used when no closed form is available.
InstanceConstants estimate_constants_sampled(const ProblemInstance& inst,
                                             int samples, std::uint64_t seed,
                                             double safety = 1.2);

// Records the calibrated dual bound on the instance.
void set_dual_bound(ProblemInstance& inst, double c_bound);

}  // namespace mazo
