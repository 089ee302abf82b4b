#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "mazo/problem.hpp"

namespace mazo {

struct ReferenceSolution {
  double f_star = 0.0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd y_star;
  double y_norm = 0.0;
  double kkt_residual = 0.0;
  std::int64_t outer_iterations = 0;
};

// Centralized projected primal-dual solve with exact gradients (closed form
// for quadratic instances): accelerated projected gradient on the inner
// problem, projected gradient ascent on the dual, run until the KKT residual
// drops below tol. Throws NoConvergence when the iteration budget runs out
// and InvalidConstants for instances without quadratic backing.
ReferenceSolution solve_reference(
    const ProblemInstance& inst, double tol,
    std::int64_t max_outer_iterations = 200000,
    std::optional<Eigen::VectorXd> x0 = std::nullopt);

}  // namespace mazo
