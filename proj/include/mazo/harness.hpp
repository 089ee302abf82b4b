#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mazo/graph.hpp"
#include "mazo/problem.hpp"
#include "mazo/solver.hpp"

namespace mazo {

// Streaming weighted average of the primal iterates.
struct RunningAverage {
  Eigen::VectorXd sum;
  double weight = 0.0;

  void update(Eigen::Ref<const Eigen::VectorXd> x, double gamma);
  Eigen::VectorXd value() const;
};

// Type-7 quantile (linear interpolation between order statistics). `data`
// need not be sorted.
double quantile_type7(std::vector<double> data, double p);

struct MetricSummary {
  std::vector<double> mean, q05, q50, q95;
};

struct EnsembleSummary {
  std::vector<std::int64_t> sample_t;
  MetricSummary f0;
  std::vector<MetricSummary> viol;  // one per constraint, raw coupled sums
  MetricSummary viol_norm;
  std::vector<double> spread_mean;
  std::vector<std::int64_t> oracle_cumulative;
  int m = 0;
  int trials_completed = 0;
  int trials_failed = 0;
};

struct EnsembleConfig {
  std::uint64_t master_seed = 1;
  int trials = 1;
  int workers = 1;
  ParamSchedule schedule;
  std::int64_t metrics_stride = 1;
  std::string out_dir;            // empty: no files written
  bool per_trial_csv = true;
};

struct EnsembleResult {
  EnsembleSummary summary;
  std::vector<TrialResult> trials;     // completed trials, by trial index
  std::vector<std::string> warnings;   // one entry per failed trial
};

using TrialRunner = std::function<TrialResult(
    const ProblemInstance&, const NetworkTopology&, const ParamSchedule&,
    std::uint64_t master_seed, std::uint32_t trial, const RunOptions&)>;

// Runs `trials` independent trials (worker pool of size `workers`),
// aggregates pointwise statistics and, if out_dir is set, writes summary.csv
// plus per-trial CSVs. Failed trials are recorded as warnings and excluded
// from aggregation, never silently dropped. Output bytes depend only on the
// master seed and trial count, not on the worker count.
EnsembleResult run_ensemble(const ProblemInstance& inst,
                            const NetworkTopology& topo,
                            const EnsembleConfig& cfg,
                            const TrialRunner& runner = {});

// summary.csv schema, one row per sampled iteration:
//   t, f0_mean, f0_q05, f0_q95,
//   viol<j>_mean, viol<j>_q05, viol<j>_q95   (per constraint j = 1..m),
//   violnorm_mean, violnorm_q05, violnorm_q95,
//   spread_mean, oracle_cumulative
// All values "%.17g", UTF-8, '.' decimal point, no locale dependence.
void export_csv(const EnsembleSummary& summary, const std::string& path);

void export_trial_csv(const TrialResult& trial, int m, const std::string& path);

}  // namespace mazo
