#pragma once

#include <vector>

#include "gradalign/model.hpp"

namespace gradalign {

// Per-layer parameter gradients, same shapes as the model's layers.
struct Grads {
  std::vector<Layer> layers;
  static Grads zeros_like(const MlpModel& model);
  void scale_all(double a);
};

// Recorded forward pass over one batch: layer inputs and hidden ReLU masks.
// This is the structure both reverse sweeps read; a second sweep recorded
// over the first one (the input-gradient chain below) gives double backprop.
struct Tape {
  DenseArray X;                    // B×n
  std::vector<DenseArray> inputs;  // inputs[l] feeds layer l (inputs[0] == X)
  std::vector<DenseArray> masks;   // ReLU masks of hidden layers (size L−1)
  DenseArray logits;               // B×C
};

Tape mlp_record(const MlpModel& model, const DenseArray& X);

// Standard reverse sweep. dZ is ∂loss/∂logits (B×C, already 1/B-scaled if the
// loss averages). Accumulates into `grads`; writes ∂loss/∂X when dX != null.
void mlp_backward(const MlpModel& model, const Tape& tape, const DenseArray& dZ,
                  Grads& grads, DenseArray* dX = nullptr);

// The input-gradient computation g = ∇_x ⟨V_b, logits(x_b)⟩ recorded as a
// chain of linear ops with the tape's masks held constant (exact for ReLU
// nets away from kinks, where ReLU'' = 0):
//   t[L−1] = V;  s[l] = t[l]·W[l];  t[l−1] = s[l] ⊙ mask[l−1];  g = s[0].
struct GradChain {
  std::vector<DenseArray> t;  // t[0..L−1]; t[L−1] == V
  DenseArray g;               // B×n
};

GradChain mlp_input_grad_record(const MlpModel& model, const Tape& tape,
                                const DenseArray& V);

// Double backprop: given Q = ∂penalty/∂g (B×n), accumulate ∂penalty/∂W into
// `grads` by reversing the chain above. Biases get no contribution — with
// constant masks the input gradient does not depend on them.
void mlp_double_backward(const MlpModel& model, const Tape& tape,
                         const GradChain& chain, const DenseArray& Q,
                         Grads& grads);

}  // namespace gradalign
