#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace mazo {

// Counter-based random streams. Every block of Gaussians is addressed by
// (master seed, trial, agent, stream tag, round); regenerating a block gives
// bit-identical values no matter how many workers ran in between. That makes
// parallel trials reproducible and lets tests replay any perturbation history.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double uniform01_halfopen() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

enum class StreamTag : std::uint64_t {
  kPrimary = 1,     // z_t, multiplies the objective differences
  kConstraint = 2,  // used for the constraint Jacobian rows
  kDualWeight = 3,  // used for the dual-weighted rows
};

struct StreamKey {
  std::uint64_t master = 0;
  std::uint32_t trial = 0;
  std::uint32_t agent = 0;
};

inline std::uint64_t derive_stream_seed(const StreamKey& key, StreamTag tag,
                                        std::int64_t t) {
  std::uint64_t h = mix64(key.master ^ 0x5bf03635f0935ad1ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(key.trial) + 0x9216d5d98979fb1bULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(key.agent) + 0x452821e638d01377ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(tag) + 0xbe5466cf34e90c6cULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(t) + 0xc0ac29b7c97c50ddULL));
  return h;
}

// Fills `out` with i.i.d. standard Gaussians via Box-Muller. Exact sampling,
// no tail truncation.
inline void fill_gaussian(const StreamKey& key, StreamTag tag, std::int64_t t,
                          Eigen::Ref<Eigen::VectorXd> out) {
  SplitMix64 gen(derive_stream_seed(key, tag, t));
  const Eigen::Index n = out.size();
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(gen.uniform01()));
    const double phi = two_pi * gen.uniform01_halfopen();
    out[i] = r * std::cos(phi);
    if (i + 1 < n) out[i + 1] = r * std::sin(phi);
  }
}

}  // namespace mazo
