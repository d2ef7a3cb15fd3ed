#pragma once

#include <vector>

#include "gradalign/tape.hpp"

namespace gradalign {

// First/second moment estimates per parameter tensor plus the step counter.
struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  long t = 0;
  static AdamState zeros_like(const std::vector<Layer>& params);
};

// Standard Adam with bias-corrected moments (β1=0.9, β2=0.999, eps=1e-8 are
// the defaults used everywhere in this project; lr is per-run).
void adam_step(std::vector<Layer>& params, const Grads& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace gradalign
