#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace mazo {

// One agent's view of everyone's freshest objective difference. `value[j]`
// holds the scalar two-point quotient collected by agent j at round
// `stamp[j]`; kNeverStamp marks entries that have not arrived yet (they
// contribute nothing to assembly).
struct DifferenceTable {
  static constexpr std::int64_t kNeverStamp = -1;

  std::vector<double> value;
  std::vector<std::int64_t> stamp;

  explicit DifferenceTable(int n = 0)
      : value(n, 0.0), stamp(n, kNeverStamp) {}
  int size() const { return static_cast<int>(value.size()); }
};

// Fixed-capacity history of an agent's own perturbation directions, indexed
// by round. Capacity must be at least diameter + 1 so every stamped direction
// stays retrievable.
class PerturbationHistory {
 public:
  PerturbationHistory(int capacity, int dim);

  void push(std::int64_t t, Eigen::Ref<const Eigen::VectorXd> z);
  bool has(std::int64_t t) const;
  // Throws StaleBeyondBuffer when t has been evicted (or never stored).
  Eigen::Ref<const Eigen::VectorXd> at(std::int64_t t) const;

  int capacity() const { return static_cast<int>(buffer_.cols()); }
  int dim() const { return static_cast<int>(buffer_.rows()); }
  std::int64_t newest() const { return newest_; }

 private:
  Eigen::MatrixXd buffer_;  // dim x capacity, column t % capacity
  std::int64_t newest_ = -1;
  std::int64_t count_ = 0;
};

// Rule 1: store the scalar quotient (f_plus - f_minus) / (2u) under the
// current stamp. The multiplication by the perturbation direction happens at
// assembly time. Throws NonFiniteValue on bad oracle values.
void record_local(DifferenceTable& table, int self, std::int64_t t,
                  double f_plus, double f_minus, double u);

// Rules 2-3: for every j != self adopt the freshest (value, stamp) pair among
// the agent's own previous-round entry and the neighbors' previous-round
// snapshots. Candidates are scanned self-first, then neighbors in ascending
// index, and only a strictly newer stamp replaces the current pick, which
// makes ties deterministic. `snapshots` are end-of-previous-round tables for
// all agents.
void gossip_merge(DifferenceTable& table, int self,
                  const std::vector<DifferenceTable>& snapshots,
                  const std::vector<int>& neighbors);

// (1/n) sum_j value[j] * z_{stamp[j]} using the owner's own perturbation
// history; sentinel entries contribute zero.
Eigen::VectorXd assemble_grad_f0(const DifferenceTable& table,
                                 const PerturbationHistory& history,
                                 int n_agents);

// Synchronous, error-free gossip rounds over a fixed neighbor structure with
// double buffering: all round-t merges read end-of-round-(t-1) snapshots.
class DiffusionNetwork {
 public:
  DiffusionNetwork(const std::vector<std::vector<int>>& neighbors,
                   const std::vector<int>& dims, int history_capacity);

  // Runs one synchronous round: every agent records its own difference and
  // perturbation, then merges neighbor snapshots.
  void step(std::int64_t t, const std::vector<double>& own_diff,
            const std::vector<Eigen::VectorXd>& own_z);

  const DifferenceTable& table(int agent) const { return current_[agent]; }
  const PerturbationHistory& history(int agent) const {
    return histories_[agent];
  }

  // When set, appends one line "t i j tau D" per table entry per round.
  void set_trace(std::ostream* trace) { trace_ = trace; }

  // Drops each neighbor message independently with this probability
  // (seeded, reproducible). Error-free operation is the default and the only
  // mode the delay law is exact under.
  void set_drop(double probability, std::uint64_t seed);

 private:
  std::vector<std::vector<int>> neighbors_;
  std::vector<DifferenceTable> current_, snapshot_;
  std::vector<PerturbationHistory> histories_;
  std::ostream* trace_ = nullptr;
  double drop_probability_ = 0.0;
  std::uint64_t drop_seed_ = 0;
};

}  // namespace mazo
