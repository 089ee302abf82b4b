#pragma once

#include <Eigen/Core>

namespace mazo {

// Convex compact action set for one agent: a Euclidean ball or an axis box.
class FeasibleSet {
 public:
  enum class Kind { kBall, kBox };

  static FeasibleSet ball(Eigen::VectorXd center, double radius);
  static FeasibleSet box(Eigen::VectorXd lower, Eigen::VectorXd upper);

  Kind kind() const { return kind_; }
  int dim() const;

  // Euclidean projection; idempotent and nonexpansive.
  void project(Eigen::Ref<const Eigen::VectorXd> in,
               Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd project(Eigen::Ref<const Eigen::VectorXd> in) const;

  bool contains(Eigen::Ref<const Eigen::VectorXd> x, double tol = 1e-9) const;

  // sup_{x in set} ||x||, the per-agent radius entering the step-size rules.
  double sup_norm() const;

  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

 private:
  FeasibleSet() = default;
  Kind kind_ = Kind::kBall;
  Eigen::VectorXd center_;
  double radius_ = 0.0;
  Eigen::VectorXd lower_, upper_;
};

// Projection onto {y >= 0, ||y|| <= C}: clamp negatives, then scale into the
// ball. For the nonnegative orthant and an origin-centered ball this
// composition is the exact Euclidean projection.
void project_dual(Eigen::Ref<const Eigen::VectorXd> y, double c_bound,
                  Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd project_dual(Eigen::Ref<const Eigen::VectorXd> y,
                             double c_bound);

}  // namespace mazo
