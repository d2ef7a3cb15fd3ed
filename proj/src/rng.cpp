#include "gradalign/rng.hpp"

#include <cmath>
#include <numbers>

namespace gradalign {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

Rng Rng::child(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(mix64(seed) + (index + 1) * kGolden));
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

double Rng::next_gauss() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 ∈ (0,1] keeps the log finite; u2 ∈ [0,1).
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // Rejection sampling over the top multiple of bound avoids modulo bias.
  std::uint64_t limit = bound * (~0ull / bound);
  for (;;) {
    std::uint64_t w = next_u64();
    if (w < limit) return w % bound;
  }
}

}  // namespace gradalign
