#include "gradalign/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gradalign {

AdamState AdamState::zeros_like(const std::vector<Layer>& params) {
  AdamState s;
  for (const Layer& layer : params) {
    s.m.push_back(Layer{DenseArray({layer.W.rows(), layer.W.cols()}),
                        DenseArray({layer.b.size()})});
    s.v.push_back(Layer{DenseArray({layer.W.rows(), layer.W.cols()}),
                        DenseArray({layer.b.size()})});
  }
  return s;
}

namespace {
void update(double* p, const double* g, double* m, double* v, std::size_t n,
            double lr, double b1, double b2, double eps, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(g[i])) throw std::runtime_error("adam_step: non-finite gradient");
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}
}  // namespace

void adam_step(std::vector<Layer>& params, const Grads& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (grads.layers.size() != params.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: structure mismatch");
  state.t += 1;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].W.data(), grads.layers[l].W.data(), state.m[l].W.data(),
           state.v[l].W.data(), params[l].W.size(), lr, beta1, beta2, eps, c1, c2);
    update(params[l].b.data(), grads.layers[l].b.data(), state.m[l].b.data(),
           state.v[l].b.data(), params[l].b.size(), lr, beta1, beta2, eps, c1, c2);
  }
}

}  // namespace gradalign
