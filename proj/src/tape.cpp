#include "gradalign/tape.hpp"

#include <stdexcept>

namespace gradalign {

Grads Grads::zeros_like(const MlpModel& model) {
  Grads g;
  for (const Layer& layer : model.layers())
    g.layers.push_back(Layer{DenseArray({layer.W.rows(), layer.W.cols()}),
                             DenseArray({layer.b.size()})});
  return g;
}

void Grads::scale_all(double a) {
  for (Layer& layer : layers) {
    scale(a, {layer.W.data(), layer.W.size()});
    scale(a, {layer.b.data(), layer.b.size()});
  }
}

Tape mlp_record(const MlpModel& model, const DenseArray& X) {
  const auto& layers = model.layers();
  Tape tape;
  tape.X = X.rank() == 1 ? DenseArray({1, X.size()}, {X.data(), X.data() + X.size()})
                         : X;
  DenseArray H = tape.X;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    tape.inputs.push_back(H);
    const Layer& layer = layers[l];
    DenseArray A({H.rows(), layer.W.rows()});
    gemm_nt(H, layer.W, A);
    if (l + 1 < layers.size()) {
      DenseArray mask({A.rows(), A.cols()});
      for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t c = 0; c < A.cols(); ++c) {
          double v = A.at(r, c) + layer.b[c];
          mask.at(r, c) = v > 0.0 ? 1.0 : 0.0;
          A.at(r, c) = v > 0.0 ? v : 0.0;
        }
      tape.masks.push_back(std::move(mask));
    } else {
      for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t c = 0; c < A.cols(); ++c) A.at(r, c) += layer.b[c];
    }
    H = std::move(A);
  }
  H.require_finite("MlpModel forward");
  tape.logits = std::move(H);
  return tape;
}

void mlp_backward(const MlpModel& model, const Tape& tape, const DenseArray& dZ,
                  Grads& grads, DenseArray* dX) {
  const auto& layers = model.layers();
  if (grads.layers.size() != layers.size())
    throw std::invalid_argument("mlp_backward: grads shape mismatch");
  DenseArray D = dZ;  // ∂loss/∂(layer l output, post-activation)
  for (std::size_t l = layers.size(); l-- > 0;) {
    // dW_l += Dᵀ·h_{l−1}; db_l += column sums of D.
    gemm_tn(D, tape.inputs[l], grads.layers[l].W, 1.0);
    for (std::size_t r = 0; r < D.rows(); ++r)
      for (std::size_t c = 0; c < D.cols(); ++c) grads.layers[l].b[c] += D.at(r, c);
    if (l == 0 && dX == nullptr) break;
    DenseArray Dprev({D.rows(), layers[l].W.cols()});
    gemm_nn(D, layers[l].W, Dprev);
    if (l > 0)
      for (std::size_t i = 0; i < Dprev.size(); ++i) Dprev[i] *= tape.masks[l - 1][i];
    D = std::move(Dprev);
  }
  if (dX != nullptr) *dX = std::move(D);
}

GradChain mlp_input_grad_record(const MlpModel& model, const Tape& tape,
                                const DenseArray& V) {
  const auto& layers = model.layers();
  GradChain chain;
  chain.t.resize(layers.size());
  chain.t[layers.size() - 1] = V;
  DenseArray cur = V;
  for (std::size_t l = layers.size(); l-- > 0;) {
    DenseArray S({cur.rows(), layers[l].W.cols()});
    gemm_nn(cur, layers[l].W, S);
    if (l > 0) {
      for (std::size_t i = 0; i < S.size(); ++i) S[i] *= tape.masks[l - 1][i];
      chain.t[l - 1] = S;
      cur = std::move(S);
    } else {
      chain.g = std::move(S);
    }
  }
  return chain;
}

void mlp_double_backward(const MlpModel& model, const Tape& tape,
                         const GradChain& chain, const DenseArray& Q,
                         Grads& grads) {
  const auto& layers = model.layers();
  DenseArray q = Q;  // ∂penalty/∂s[l] while walking l = 0..L−1
  for (std::size_t l = 0; l < layers.size(); ++l) {
    gemm_tn(chain.t[l], q, grads.layers[l].W, 1.0);  // dW_l += t_lᵀ·q
    if (l + 1 == layers.size()) break;
    DenseArray qt({q.rows(), layers[l].W.rows()});
    gemm_nt(q, layers[l].W, qt);  // ∂penalty/∂t[l] = q·W_lᵀ
    for (std::size_t i = 0; i < qt.size(); ++i) qt[i] *= tape.masks[l][i];
    q = std::move(qt);
  }
}

}  // namespace gradalign
