#pragma once

#include <cmath>
#include <cstdint>

namespace schelling {

/// splitmix64: the project-wide pseudo-random generator.
///
/// It is a counter-based mixer (state advances by a fixed odd constant and
/// each output is a bijective hash of the state), so streams are cheap to
/// fork and every draw is reproducible from the 64-bit seed alone. All
/// randomness in the library goes through this type; std:: distributions are
/// avoided because their outputs are implementation-defined.
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n). Multiply-shift; the O(n/2^64) bias is irrelevant here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Uniform in the open interval (0,1): 53-bit mantissa, half-step offset so
  /// neither endpoint is reachable.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform in [0,1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  /// Exponential(rate) via inversion; strictly positive.
  double next_exponential(double rate = 1.0) {
    return -std::log(next_open01()) / rate;
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0;
};

/// First output of a splitmix64 stream seeded with `n`.
inline std::uint64_t splitmix64_at(std::uint64_t n) {
  return SplitMix64(n).next_u64();
}

/// Replica seed derivation: base_seed XOR splitmix64(replica_index).
/// Keeps replica streams decorrelated while replica 0..k seeds stay stable
/// when the base seed changes.
inline std::uint64_t derive_replica_seed(std::uint64_t base_seed,
                                         std::uint64_t replica_index) {
  return base_seed ^ splitmix64_at(replica_index);
}

}  // namespace schelling
