#include "mazo/sets.hpp"

#include <cmath>

#include "mazo/errors.hpp"

namespace mazo {

FeasibleSet FeasibleSet::ball(Eigen::VectorXd center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InvalidConstants("ball radius must be positive and finite");
  FeasibleSet s;
  s.kind_ = Kind::kBall;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() != upper.size())
    throw DimensionMismatch("box bounds must have equal dimension");
  if ((lower.array() > upper.array()).any())
    throw InvalidConstants("box requires lower <= upper componentwise");
  FeasibleSet s;
  s.kind_ = Kind::kBox;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

int FeasibleSet::dim() const {
  return kind_ == Kind::kBall ? static_cast<int>(center_.size())
                              : static_cast<int>(lower_.size());
}

void FeasibleSet::project(Eigen::Ref<const Eigen::VectorXd> in,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  if (in.size() != dim() || out.size() != dim())
    throw DimensionMismatch("project: point dimension mismatch");
  if (kind_ == Kind::kBall) {
    out = in - center_;
    const double norm = out.norm();
    if (norm > radius_)
      out = center_ + (radius_ / norm) * out;
    else
      out = in;
  } else {
    out = in.cwiseMax(lower_).cwiseMin(upper_);
  }
}

Eigen::VectorXd FeasibleSet::project(Eigen::Ref<const Eigen::VectorXd> in) const {
  Eigen::VectorXd out(dim());
  project(in, out);
  return out;
}

bool FeasibleSet::contains(Eigen::Ref<const Eigen::VectorXd> x,
                           double tol) const {
  if (x.size() != dim()) return false;
  if (kind_ == Kind::kBall) return (x - center_).norm() <= radius_ + tol;
  return (x.array() >= lower_.array() - tol).all() &&
         (x.array() <= upper_.array() + tol).all();
}

double FeasibleSet::sup_norm() const {
  if (kind_ == Kind::kBall) return center_.norm() + radius_;
  double sum = 0.0;
  for (int i = 0; i < dim(); ++i)
    sum += std::max(lower_[i] * lower_[i], upper_[i] * upper_[i]);
  return std::sqrt(sum);
}

void project_dual(Eigen::Ref<const Eigen::VectorXd> y, double c_bound,
                  Eigen::Ref<Eigen::VectorXd> out) {
  if (!(c_bound > 0.0))
    throw InvalidConstants("project_dual: bound must be positive");
  if (out.size() != y.size())
    throw DimensionMismatch("project_dual: output dimension mismatch");
  out = y.cwiseMax(0.0);
  const double norm = out.norm();
  if (norm > c_bound) out *= c_bound / norm;
}

Eigen::VectorXd project_dual(Eigen::Ref<const Eigen::VectorXd> y,
                             double c_bound) {
  Eigen::VectorXd out(y.size());
  project_dual(y, c_bound, out);
  return out;
}

}  // namespace mazo
