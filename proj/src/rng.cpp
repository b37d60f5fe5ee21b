#include "psksdr/rng.hpp"

#include <cmath>
#include <numbers>

namespace psksdr {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t k = mix64(base + kGolden);
  k = mix64(k ^ (a * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
  k = mix64(k ^ (b * 0x8CB92BA72F3D8DD7ULL + 0x2545F4914F6CDD1DULL));
  return k;
}

std::uint64_t CounterRng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Lemire-style rejection keeps the draw exactly uniform.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % bound;
  }
}

std::complex<double> CounterRng::normal_pair() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::complex<double> CounterRng::complex_normal(double variance) noexcept {
  return normal_pair() * std::sqrt(variance / 2.0);
}

}  // namespace psksdr
