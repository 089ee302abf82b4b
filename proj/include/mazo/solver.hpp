#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "mazo/estimators.hpp"
#include "mazo/graph.hpp"
#include "mazo/problem.hpp"

namespace mazo {

// Step-size constants produced by the horizon-aware parameter rule.
struct HorizonParams {
  double xi = 0.0;
  double zeta = 0.0;
  double eta = 0.0;  // base primal step; per round 1/eta_t = L0 + L_max + 1/eta
  double mu = 0.0;   // constant dual step
  double u = 0.0;    // smoothing radius
  double b_bar = 0.0, frak_b_bar = 0.0, rho = 0.0, r_bar = 0.0, l_max = 0.0;
};

HorizonParams compute_horizon_params_core(const InstanceConstants& cs,
                                             int n, int d, double b_bar,
                                             double frak_b_bar, double rho,
                                             std::int64_t horizon, int m);

HorizonParams compute_horizon_params(const ProblemInstance& inst,
                                        const NetworkTopology& topo,
                                        std::int64_t horizon);

enum class ScheduleMode { kConstant, kDiminishing, kHorizonRule };

struct ParamSchedule {
  ScheduleMode mode = ScheduleMode::kConstant;
  std::int64_t horizon = 0;
  double u = 0.0;        // smoothing radius
  double c_bound = 0.0;  // dual ball radius
  double theta = 1.0;
  double gamma = 1.0;

  double eta_const = 0.0, mu_const = 0.0;  // constant mode
  double dim_offset = 0.0;                 // diminishing: 1/(sqrt(t) + offset)
  double horizon_eta = 0.0;                // horizon-rule base eta
  double l0_plus_lmax = 0.0;

  double eta_t(std::int64_t t) const;
  double mu_t(std::int64_t t) const;
  double theta_t(std::int64_t) const { return theta; }
  double gamma_t(std::int64_t) const { return gamma; }

  void validate() const;

  static ParamSchedule constant(double eta, double mu, double u, double c_bound,
                                std::int64_t horizon);
  static ParamSchedule diminishing(double offset, double u, double c_bound,
                                   std::int64_t horizon);
  static ParamSchedule horizon_rule(const HorizonParams& tc,
                               const InstanceConstants& cs,
                               std::int64_t horizon);
};

// Checks gamma_t * theta_t = gamma_{t-1} and gamma_t / mu_t constant over the
// probed range; returns the first violating round or -1.
std::int64_t check_weight_relations(
    const std::function<double(std::int64_t)>& gamma_fn,
    const std::function<double(std::int64_t)>& theta_fn,
    const std::function<double(std::int64_t)>& mu_fn, std::int64_t horizon,
    double tol = 1e-12);

// Per-agent algorithm state.
struct AgentState {
  Eigen::VectorXd x, x_prev;
  Eigen::VectorXd y;
  Eigen::VectorXd ell_curr, ell_prev;  // constraint linearizations
  Eigen::MatrixXd jac_prev;            // previous constraint-gradient estimate
  Eigen::VectorXd running_sum_x;
  double running_sum_gamma = 0.0;
};

// ell_new is the fresh constraint linearization l(t); returns the
// extrapolated s_t = (1 + theta) l(t) - theta l(t-1) and shifts the stored
// linearizations.
Eigen::VectorXd extrapolate_from_linearization(
    AgentState& state, Eigen::Ref<const Eigen::VectorXd> ell_new, double theta);

// Full form: l(t) = g_obs + jac_prev (x_curr - x_prev).
Eigen::VectorXd extrapolate_constraint(AgentState& state,
                                       Eigen::Ref<const Eigen::VectorXd> g_obs,
                                       Eigen::Ref<const Eigen::MatrixXd> jac_prev,
                                       Eigen::Ref<const Eigen::VectorXd> x_curr,
                                       double theta);

// p_i = sum_j W_ij y_j over the round-t dual snapshots (rows of duals).
Eigen::VectorXd consensus_mix(Eigen::Ref<const Eigen::RowVectorXd> w_row,
                              Eigen::Ref<const Eigen::MatrixXd> duals);

// Closed form of the dual prox step: project p + mu s onto the dual set.
Eigen::VectorXd dual_step(Eigen::Ref<const Eigen::VectorXd> p,
                          Eigen::Ref<const Eigen::VectorXd> s, double mu,
                          double c_bound);

// Closed form of the primal prox step: project x - eta v onto the action set.
Eigen::VectorXd primal_step(Eigen::Ref<const Eigen::VectorXd> x,
                            Eigen::Ref<const Eigen::VectorXd> v, double eta,
                            const FeasibleSet& set);

// Per-round quantities handed to an optional monitor callback.
struct RoundMonitor {
  std::int64_t t = 0;
  double dev_y_before = 0.0;  // Frobenius deviation of the duals from their mean
  double dev_p = 0.0;         // same after the consensus mix
  double dev_y_after = 0.0;   // after the dual step
  double s_frob = 0.0;        // Frobenius norm of the stacked s_t
  double max_s_norm = 0.0;
  double mu = 0.0;
};

struct RunOptions {
  std::int64_t metrics_stride = 1;
  bool record_iterates = false;
  std::function<void(const RoundMonitor&)> monitor;
  std::ostream* diffusion_trace = nullptr;
};

struct TrialResult {
  std::uint32_t trial = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::int64_t> sample_t;  // rounds completed at each sample
  std::vector<double> f0_avg;          // objective of the running average
  Eigen::MatrixXd viol;                // samples x m, raw coupled sums
  std::vector<double> viol_norm;       // norm of the positive part
  std::vector<double> dual_spread;     // max_i ||y_i - mean||
  std::vector<std::int64_t> oracle_cumulative;  // per-agent queries so far
  std::vector<OracleCounter> counters;          // per agent, final
  Eigen::VectorXd x_avg_final;
  double f0_final = 0.0;
  double viol_norm_final = 0.0;
  Eigen::MatrixXd iterates;  // T x d when record_iterates is set
};

// One full trial of the distributed primal-dual loop.
TrialResult run(const ProblemInstance& inst, const NetworkTopology& topo,
                const ParamSchedule& sched, std::uint64_t master_seed,
                std::uint32_t trial, const RunOptions& opts = {});

}  // namespace mazo
