#include "mazo/diffusion.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mazo/errors.hpp"
#include "mazo/rng.hpp"

namespace mazo {

PerturbationHistory::PerturbationHistory(int capacity, int dim) {
  if (capacity <= 0 || dim < 0)
    throw InvalidConstants("PerturbationHistory: bad capacity or dimension");
  buffer_.setZero(dim, capacity);
}

void PerturbationHistory::push(std::int64_t t,
                               Eigen::Ref<const Eigen::VectorXd> z) {
  if (z.size() != buffer_.rows())
    throw DimensionMismatch("PerturbationHistory: direction has wrong size");
  if (t != newest_ + 1)
    throw StaleBeyondBuffer("PerturbationHistory: rounds must be pushed in order");
  buffer_.col(t % buffer_.cols()) = z;
  newest_ = t;
  ++count_;
}

bool PerturbationHistory::has(std::int64_t t) const {
  return t >= 0 && t <= newest_ && newest_ - t < buffer_.cols() &&
         t > newest_ - count_;
}

Eigen::Ref<const Eigen::VectorXd> PerturbationHistory::at(
    std::int64_t t) const {
  if (!has(t))
    throw StaleBeyondBuffer(
        "PerturbationHistory: round " + std::to_string(t) +
        " is outside the retained window ending at " + std::to_string(newest_));
  return buffer_.col(t % buffer_.cols());
}

void record_local(DifferenceTable& table, int self, std::int64_t t,
                  double f_plus, double f_minus, double u) {
  if (!(u > 0.0)) throw InvalidConstants("record_local: u must be > 0");
  if (self < 0 || self >= table.size())
    throw DimensionMismatch("record_local: agent index out of range");
  if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
    throw NonFiniteValue("record_local: observed cost is not finite");
  table.value[self] = (f_plus - f_minus) / (2.0 * u);
  table.stamp[self] = t;
}

void gossip_merge(DifferenceTable& table, int self,
                  const std::vector<DifferenceTable>& snapshots,
                  const std::vector<int>& neighbors) {
  const int n = table.size();
  for (int j = 0; j < n; ++j) {
    if (j == self) continue;
    for (int k : neighbors) {
      const auto& snap = snapshots[k];
      if (snap.stamp[j] > table.stamp[j]) {
        table.stamp[j] = snap.stamp[j];
        table.value[j] = snap.value[j];
      }
    }
  }
}

Eigen::VectorXd assemble_grad_f0(const DifferenceTable& table,
                                 const PerturbationHistory& history,
                                 int n_agents) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(history.dim());
  for (int j = 0; j < table.size(); ++j) {
    if (table.stamp[j] == DifferenceTable::kNeverStamp) continue;
    out += table.value[j] * history.at(table.stamp[j]);
  }
  return out / static_cast<double>(n_agents);
}

DiffusionNetwork::DiffusionNetwork(
    const std::vector<std::vector<int>>& neighbors,
    const std::vector<int>& dims, int history_capacity)
    : neighbors_(neighbors) {
  const int n = static_cast<int>(neighbors.size());
  if (static_cast<int>(dims.size()) != n)
    throw DimensionMismatch("DiffusionNetwork: dims size mismatch");
  current_.assign(n, DifferenceTable(n));
  snapshot_.assign(n, DifferenceTable(n));
  histories_.reserve(n);
  for (int i = 0; i < n; ++i)
    histories_.emplace_back(history_capacity, dims[i]);
}

void DiffusionNetwork::set_drop(double probability, std::uint64_t seed) {
  if (probability < 0.0 || probability >= 1.0)
    throw InvalidConstants("DiffusionNetwork: drop probability in [0, 1)");
  drop_probability_ = probability;
  drop_seed_ = seed;
}

void DiffusionNetwork::step(std::int64_t t, const std::vector<double>& own_diff,
                            const std::vector<Eigen::VectorXd>& own_z) {
  const int n = static_cast<int>(current_.size());
  snapshot_.swap(current_);
  for (int i = 0; i < n; ++i) {
    current_[i] = snapshot_[i];
    // record_local needs a finite quotient; the caller already divided by 2u,
    // so recheck and stamp here.
    if (!std::isfinite(own_diff[i]))
      throw NonFiniteValue("DiffusionNetwork: difference value is not finite");
    current_[i].value[i] = own_diff[i];
    current_[i].stamp[i] = t;
    histories_[i].push(t, own_z[i]);
    if (drop_probability_ > 0.0) {
      std::vector<int> delivered;
      for (int k : neighbors_[i]) {
        SplitMix64 coin(derive_stream_seed(
            StreamKey{drop_seed_, static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(k)},
            StreamTag::kPrimary, t));
        if (coin.uniform01_halfopen() >= drop_probability_)
          delivered.push_back(k);
      }
      gossip_merge(current_[i], i, snapshot_, delivered);
    } else {
      gossip_merge(current_[i], i, snapshot_, neighbors_[i]);
    }
  }
  if (trace_) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        (*trace_) << t << " " << i << " " << j << " " << current_[i].stamp[j]
                  << " " << current_[i].value[j] << "\n";
  }
}

}  // namespace mazo
