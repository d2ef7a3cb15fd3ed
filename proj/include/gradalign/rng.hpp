#pragma once

#include <cstdint>

namespace gradalign {

// SplitMix64 finalizer; also used to derive decorrelated child-stream seeds.
std::uint64_t mix64(std::uint64_t z);

// Deterministic PRNG: SplitMix64 for 64-bit words, Box–Muller for Gaussians.
// Identical seed ⇒ identical stream. Independent streams come from
// child(seed, index); the whole project derives per-sample/per-epoch streams
// this way so results are invariant to batching and worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng child(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform in [0,1): top 53 bits of the next word.
  double next_unit();
  // Uniform in [lo,hi).
  double uniform(double lo, double hi);
  // Standard normal via Box–Muller; the paired draw is cached.
  double next_gauss();
  // Uniform integer in [0, bound) by rejection (bound > 0).
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace gradalign
