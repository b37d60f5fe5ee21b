#pragma once

#include <complex>
#include <cstdint>

namespace psksdr {

// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Derives an independent 64-bit key from a parent key and two indices.
// Used for instance substreams and for per-trial seeds in sweeps.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Counter-based generator: the k-th draw is mix64(key + (k + 1) * golden),
/// i.e. SplitMix64 with an explicit counter. A stream is fully described by
/// (key, counter), so reproducing any draw needs no hidden state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  // Substream for `stream_id` under `seed`.
  static CounterRng stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return CounterRng(derive_seed(seed, stream_id));
  }

  std::uint64_t next_u64() noexcept;
  // Uniform on (0, 1], 53-bit resolution.
  double uniform() noexcept;
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Box-Muller pair of independent N(0, 1) draws.
  std::complex<double> normal_pair() noexcept;
  // Circularly symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids used by instance generation.
inline constexpr std::uint64_t kStreamChannel = 1;
inline constexpr std::uint64_t kStreamSymbols = 2;
inline constexpr std::uint64_t kStreamNoise = 3;

}  // namespace psksdr
