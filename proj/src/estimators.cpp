#include "mazo/estimators.hpp"

#include <cmath>

#include "mazo/errors.hpp"

namespace mazo {

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteValue(what);
  return v;
}

}  // namespace

double two_point_scalar_diff(const ScalarFn& f,
                             Eigen::Ref<const Eigen::VectorXd> x, double u,
                             Eigen::Ref<const Eigen::VectorXd> z,
                             OracleCounter* counter) {
  if (!(u > 0.0)) throw InvalidConstants("two_point_scalar_diff: u must be > 0");
  if (x.size() != z.size())
    throw DimensionMismatch("two_point_scalar_diff: x and z sizes differ");
  const double f_plus = checked(f(x + u * z), "objective value is not finite");
  const double f_minus = checked(f(x - u * z), "objective value is not finite");
  if (counter) counter->objective_evals += 2;
  return (f_plus - f_minus) / (2.0 * u);
}

Eigen::MatrixXd constraint_jacobian_estimate(
    const ConstraintFn& g, int m, Eigen::Ref<const Eigen::VectorXd> xi,
    double u, Eigen::Ref<const Eigen::VectorXd> zhat, OracleCounter* counter) {
  if (!(u > 0.0))
    throw InvalidConstants("constraint_jacobian_estimate: u must be > 0");
  if (xi.size() != zhat.size())
    throw DimensionMismatch("constraint_jacobian_estimate: x and z sizes differ");
  const Eigen::VectorXd plus = xi + u * zhat;
  const Eigen::VectorXd minus = xi - u * zhat;
  Eigen::MatrixXd rows(m, xi.size());
  for (int j = 0; j < m; ++j) {
    const double diff =
        (checked(g(j, plus), "constraint value is not finite") -
         checked(g(j, minus), "constraint value is not finite")) /
        (2.0 * u);
    rows.row(j) = diff * zhat.transpose();
  }
  if (counter) counter->constraint_evals += 2 * m;
  return rows;
}

Eigen::VectorXd dual_weighted_rows(const ConstraintFn& g, int m,
                                   Eigen::Ref<const Eigen::VectorXd> xi,
                                   double u,
                                   Eigen::Ref<const Eigen::VectorXd> zbar,
                                   Eigen::Ref<const Eigen::VectorXd> y,
                                   OracleCounter* counter) {
  if (!(u > 0.0)) throw InvalidConstants("dual_weighted_rows: u must be > 0");
  if (y.size() != m)
    throw DimensionMismatch("dual_weighted_rows: dual has wrong dimension");
  const Eigen::VectorXd plus = xi + u * zbar;
  const Eigen::VectorXd minus = xi - u * zbar;
  double weighted = 0.0;
  for (int j = 0; j < m; ++j) {
    const double diff =
        (checked(g(j, plus), "constraint value is not finite") -
         checked(g(j, minus), "constraint value is not finite")) /
        (2.0 * u);
    weighted += diff * y[j];
  }
  if (counter) counter->constraint_evals += 2 * m;
  return weighted * zbar;
}

SmoothingCheckResult smoothing_gap_bound_check(const Eigen::MatrixXd& a_quad,
                                               double u, double m_lip,
                                               double l_smooth, int samples,
                                               std::uint64_t seed) {
  if (!(u > 0.0))
    throw InvalidConstants("smoothing_gap_bound_check: u must be > 0");
  const auto d = a_quad.rows();
  if (a_quad.cols() != d)
    throw DimensionMismatch("smoothing_gap_bound_check: A must be square");

  SmoothingCheckResult res;
  res.gap = u * u * std::abs(a_quad.trace());
  res.bound = std::min(u * m_lip * std::sqrt(static_cast<double>(d)),
                       0.5 * u * u * l_smooth * static_cast<double>(d));
  res.witness_u = u;
  // The gap of a quadratic does not depend on x; sampling documents the
  // points the check was nominally evaluated at.
  SplitMix64 gen(mix64(seed ^ 0x082efa98ec4e6c89ULL));
  Eigen::VectorXd x(d);
  for (int s = 0; s < std::max(samples, 1); ++s)
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, x);
  if (res.gap > res.bound + 1e-15) {
    res.pass = false;
    res.witness_x = x;
  }
  return res;
}

}  // namespace mazo
