#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "mazo/rng.hpp"

namespace mazo {

// The three per-agent Gaussian direction streams of one trial. Tags keep the
// streams statistically independent; (seed, trial, agent, t) addressing makes
// every vector reproducible.
struct PerturbationStreams {
  StreamKey key;
  double u = 0.0;  // smoothing radius

  void primary(std::int64_t t, Eigen::Ref<Eigen::VectorXd> out) const {
    fill_gaussian(key, StreamTag::kPrimary, t, out);
  }
  void constraint_dir(std::int64_t t, Eigen::Ref<Eigen::VectorXd> out) const {
    fill_gaussian(key, StreamTag::kConstraint, t, out);
  }
  void dual_weight_dir(std::int64_t t, Eigen::Ref<Eigen::VectorXd> out) const {
    fill_gaussian(key, StreamTag::kDualWeight, t, out);
  }
};

// Zeroth-order query bookkeeping for one agent. Per round the algorithm adds
// exactly 2 objective queries, 4m constraint queries and 1 direct g_i
// observation.
struct OracleCounter {
  std::int64_t objective_evals = 0;
  std::int64_t constraint_evals = 0;
  std::int64_t constraint_observations = 0;

  std::int64_t total() const {
    return objective_evals + constraint_evals + constraint_observations;
  }
};

using ScalarFn = std::function<double(Eigen::Ref<const Eigen::VectorXd>)>;

// (f(x+uz) - f(x-uz)) / (2u). Exactly <grad f, z> for affine f, any u > 0.
// Throws NonFiniteValue if the oracle returns NaN/Inf.
double two_point_scalar_diff(const ScalarFn& f,
                             Eigen::Ref<const Eigen::VectorXd> x, double u,
                             Eigen::Ref<const Eigen::VectorXd> z,
                             OracleCounter* counter = nullptr);

using ConstraintFn =
    std::function<double(int j, Eigen::Ref<const Eigen::VectorXd>)>;

// Stacked constraint-gradient estimate: row j is the two-point difference of
// g_ij along zhat times zhat^T (rank one).
Eigen::MatrixXd constraint_jacobian_estimate(
    const ConstraintFn& g, int m, Eigen::Ref<const Eigen::VectorXd> xi,
    double u, Eigen::Ref<const Eigen::VectorXd> zhat,
    OracleCounter* counter = nullptr);

// sum_j [y]_j * (two-point difference of g_ij along zbar) * zbar.
Eigen::VectorXd dual_weighted_rows(const ConstraintFn& g, int m,
                                   Eigen::Ref<const Eigen::VectorXd> xi,
                                   double u,
                                   Eigen::Ref<const Eigen::VectorXd> zbar,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   OracleCounter* counter = nullptr);

struct SmoothingCheckResult {
  bool pass = true;
  double gap = 0.0;     // |h^u(x) - h(x)|, exact for quadratics
  double bound = 0.0;   // min{ u M sqrt(d), u^2 L d / 2 }
  double witness_u = 0.0;
  Eigen::VectorXd witness_x;
};

// For h(x) = x^T A x + q^T x + r the Gaussian-smoothed gap is exactly
// u^2 * tr(A), independent of x. Verifies it against the two-branch bound at
// `samples` random points.
SmoothingCheckResult smoothing_gap_bound_check(const Eigen::MatrixXd& a_quad,
                                               double u, double m_lip,
                                               double l_smooth, int samples,
                                               std::uint64_t seed);

}  // namespace mazo
