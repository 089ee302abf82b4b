#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mazo/graph.hpp"
#include "mazo/problem.hpp"
#include "mazo/solver.hpp"

namespace mazo {

struct CheckReport {
  std::string name;
  bool pass = false;
  std::string detail;
};

// W symmetric, row/column sums 1 within 1e-12, positive diagonal, zero off
// the edge set when neighbor lists are supplied. Failure names the violated
// invariant.
CheckReport check_doubly_stochastic(
    const Eigen::MatrixXd& w,
    const std::vector<std::vector<int>>* neighbors = nullptr);

// Thirty graphs (paths, rings, stars, complete, random connected, n <= 12):
// after diameter warm-up every stamp must equal t - b_ij exactly for 100
// rounds.
CheckReport check_delay_law(std::uint64_t seed);

// Dual and primal prox steps against a dense grid-search argmin (within
// 2e-3 on `cases` random low-dimensional problems) plus nonexpansiveness of
// the projections on 10^4 random pairs.
CheckReport check_projection_oracles(int cases, std::uint64_t seed);

// Two-point estimator exact on affine functions; Monte Carlo mean on a
// quadratic within 3 standard errors of the true gradient per component
// (N = 1e5).
CheckReport check_estimator_statistics(std::uint64_t seed);

// Closed-form smoothing gap of every generated g_ij against the two-branch
// bound, sampling u inside the admissible range. Zero violations allowed.
CheckReport check_smoothing_bound(const ProblemInstance& inst, int samples,
                                  std::uint64_t seed);

// Monitored short run: per-round Frobenius dual-spread contraction
// dev(Y_{t+1}) <= rho dev(Y_t) + mu_t ||S_t||_F, the steady-state spread
// bound mu max_t ||S_t||_F / (1 - rho), and the W invariants.
CheckReport check_consensus_contraction(const ProblemInstance& inst,
                                        const NetworkTopology& topo,
                                        const ParamSchedule& sched,
                                        std::uint64_t seed);

// The default self-check bundle backing `verify` (builds its own small
// instance and topology).
std::vector<CheckReport> run_verification_suites(std::uint64_t seed);

}  // namespace mazo
