#include "mazo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mazo/errors.hpp"

namespace mazo {

void RunningAverage::update(Eigen::Ref<const Eigen::VectorXd> x, double gamma) {
  if (!(gamma > 0.0)) throw InvalidConstants("RunningAverage: gamma must be > 0");
  if (sum.size() == 0) sum = Eigen::VectorXd::Zero(x.size());
  if (sum.size() != x.size())
    throw DimensionMismatch("RunningAverage: dimension changed mid-stream");
  sum += gamma * x;
  weight += gamma;
}

Eigen::VectorXd RunningAverage::value() const {
  if (!(weight > 0.0)) throw InvalidConstants("RunningAverage: empty average");
  return sum / weight;
}

double quantile_type7(std::vector<double> data, double p) {
  if (data.empty()) throw InvalidConstants("quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw InvalidConstants("quantile: p outside [0,1]");
  std::sort(data.begin(), data.end());
  const double h = (static_cast<double>(data.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, data.size() - 1);
  const double frac = h - std::floor(h);
  return data[lo] + frac * (data[hi] - data[lo]);
}

namespace {

MetricSummary summarize_metric(
    const std::vector<const TrialResult*>& trials,
    const std::function<double(const TrialResult&, std::size_t)>& pick,
    std::size_t n_samples) {
  MetricSummary out;
  out.mean.resize(n_samples);
  out.q05.resize(n_samples);
  out.q50.resize(n_samples);
  out.q95.resize(n_samples);
  std::vector<double> vals(trials.size());
  for (std::size_t s = 0; s < n_samples; ++s) {
    double acc = 0.0;
    for (std::size_t k = 0; k < trials.size(); ++k) {
      vals[k] = pick(*trials[k], s);
      acc += vals[k];
    }
    out.mean[s] = acc / static_cast<double>(trials.size());
    out.q05[s] = quantile_type7(vals, 0.05);
    out.q50[s] = quantile_type7(vals, 0.50);
    out.q95[s] = quantile_type7(vals, 0.95);
    if (!(out.q05[s] <= out.q50[s] && out.q50[s] <= out.q95[s]))
      throw std::logic_error("ensemble summary: quantiles out of order");
  }
  return out;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EnsembleResult run_ensemble(const ProblemInstance& inst,
                            const NetworkTopology& topo,
                            const EnsembleConfig& cfg,
                            const TrialRunner& runner) {
  if (cfg.trials < 1) throw ConfigError("run_ensemble: need at least one trial");
  const TrialRunner& launch =
      runner ? runner
             : TrialRunner([](const ProblemInstance& pi,
                              const NetworkTopology& nt,
                              const ParamSchedule& ps, std::uint64_t seed,
                              std::uint32_t trial, const RunOptions& opts) {
                 return run(pi, nt, ps, seed, trial, opts);
               });

  EnsembleResult result;
  std::vector<TrialResult> slots(cfg.trials);
  std::vector<char> ok(cfg.trials, 0);
  std::vector<std::string> errors(cfg.trials);

  RunOptions opts;
  opts.metrics_stride = cfg.metrics_stride;

  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= cfg.trials) return;
      try {
        slots[k] = launch(inst, topo, cfg.schedule, cfg.master_seed,
                          static_cast<std::uint32_t>(k), opts);
        ok[k] = 1;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };

  const int n_workers = std::max(1, std::min(cfg.workers, cfg.trials));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<const TrialResult*> completed;
  for (int k = 0; k < cfg.trials; ++k) {
    if (ok[k]) {
      completed.push_back(&slots[k]);
    } else {
      result.warnings.push_back("trial " + std::to_string(k) +
                                " failed and was excluded: " + errors[k]);
    }
  }
  if (completed.empty())
    throw NoConvergence("run_ensemble: every trial failed; first error: " +
                        (cfg.trials > 0 ? errors[0] : std::string("none")));

  EnsembleSummary& summary = result.summary;
  summary.m = inst.m;
  summary.trials_completed = static_cast<int>(completed.size());
  summary.trials_failed = cfg.trials - summary.trials_completed;
  summary.sample_t = completed.front()->sample_t;
  const std::size_t n_samples = summary.sample_t.size();
  for (const auto* tr : completed)
    if (tr->sample_t != summary.sample_t)
      throw std::logic_error("run_ensemble: trials disagree on sample grid");

  summary.f0 = summarize_metric(
      completed,
      [](const TrialResult& tr, std::size_t s) { return tr.f0_avg[s]; },
      n_samples);
  summary.viol.clear();
  for (int j = 0; j < inst.m; ++j)
    summary.viol.push_back(summarize_metric(
        completed,
        [j](const TrialResult& tr, std::size_t s) {
          return tr.viol(static_cast<Eigen::Index>(s), j);
        },
        n_samples));
  summary.viol_norm = summarize_metric(
      completed,
      [](const TrialResult& tr, std::size_t s) { return tr.viol_norm[s]; },
      n_samples);
  summary.spread_mean.resize(n_samples);
  summary.oracle_cumulative.resize(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double acc = 0.0;
    for (const auto* tr : completed) acc += tr->dual_spread[s];
    summary.spread_mean[s] = acc / static_cast<double>(completed.size());
    summary.oracle_cumulative[s] = completed.front()->oracle_cumulative[s];
  }

  for (const auto* tr : completed) result.trials.push_back(*tr);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    export_csv(summary, cfg.out_dir + "/summary.csv");
    if (cfg.per_trial_csv) {
      for (const auto& tr : result.trials) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03u.csv", tr.trial);
        export_trial_csv(tr, inst.m, cfg.out_dir + "/" + name);
      }
    }
  }
  return result;
}

void export_csv(const EnsembleSummary& summary, const std::string& path) {
  std::ostringstream out;
  out << "t,f0_mean,f0_q05,f0_q95";
  for (int j = 1; j <= summary.m; ++j)
    out << ",viol" << j << "_mean,viol" << j << "_q05,viol" << j << "_q95";
  out << ",violnorm_mean,violnorm_q05,violnorm_q95,spread_mean,"
         "oracle_cumulative\n";
  for (std::size_t s = 0; s < summary.sample_t.size(); ++s) {
    out << summary.sample_t[s] << "," << format_value(summary.f0.mean[s]) << ","
        << format_value(summary.f0.q05[s]) << ","
        << format_value(summary.f0.q95[s]);
    for (int j = 0; j < summary.m; ++j)
      out << "," << format_value(summary.viol[j].mean[s]) << ","
          << format_value(summary.viol[j].q05[s]) << ","
          << format_value(summary.viol[j].q95[s]);
    out << "," << format_value(summary.viol_norm.mean[s]) << ","
        << format_value(summary.viol_norm.q05[s]) << ","
        << format_value(summary.viol_norm.q95[s]) << ","
        << format_value(summary.spread_mean[s]) << ","
        << summary.oracle_cumulative[s] << "\n";
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("export_csv: cannot open " + path);
  file << out.str();
  if (!file) throw IoError("export_csv: write failed for " + path);
}

void export_trial_csv(const TrialResult& trial, int m,
                      const std::string& path) {
  std::ostringstream out;
  out << "t,f0";
  for (int j = 1; j <= m; ++j) out << ",viol" << j;
  out << ",violnorm,spread,oracle_cumulative\n";
  for (std::size_t s = 0; s < trial.sample_t.size(); ++s) {
    out << trial.sample_t[s] << "," << format_value(trial.f0_avg[s]);
    for (int j = 0; j < m; ++j)
      out << "," << format_value(trial.viol(static_cast<Eigen::Index>(s), j));
    out << "," << format_value(trial.viol_norm[s]) << ","
        << format_value(trial.dual_spread[s]) << ","
        << trial.oracle_cumulative[s] << "\n";
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("export_trial_csv: cannot open " + path);
  file << out.str();
  if (!file) throw IoError("export_trial_csv: write failed for " + path);
}

}  // namespace mazo
