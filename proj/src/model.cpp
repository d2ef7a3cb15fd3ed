#include "gradalign/model.hpp"

#include <cmath>
#include <stdexcept>

namespace gradalign {

namespace {
// Rank-1 inputs act as a single row; remember to restore the shape on output.
DenseArray as_batch(const DenseArray& X, std::size_t n, const char* who) {
  if (X.cols() != n)
    throw std::invalid_argument(std::string(who) + ": input dim mismatch");
  if (X.rank() == 1) return DenseArray({1, n}, {X.data(), X.data() + X.size()});
  return X;
}

DenseArray match_rank(DenseArray out, const DenseArray& like) {
  if (like.rank() == 1 && out.rows() == 1)
    return DenseArray({out.cols()}, {out.data(), out.data() + out.size()});
  return out;
}
}  // namespace

std::uint32_t argmax_row(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<std::uint32_t>(best);
}

std::vector<std::uint32_t> predict(const Model& model, const DenseArray& X) {
  DenseArray Z = model.logits(X);
  std::vector<std::uint32_t> out(Z.rows());
  for (std::size_t r = 0; r < Z.rows(); ++r) out[r] = argmax_row(Z.row(r));
  return out;
}

LinearModel::LinearModel(DenseArray W, DenseArray b)
    : W_(std::move(W)), b_(std::move(b)) {
  if (W_.rank() != 2 || b_.size() != W_.cols())
    throw std::invalid_argument("LinearModel: W must be n×C with b length C");
}

DenseArray LinearModel::logits(const DenseArray& X) const {
  DenseArray Xb = as_batch(X, dim(), "LinearModel::logits");
  DenseArray Z({Xb.rows(), class_count()});
  for (std::size_t r = 0; r < Z.rows(); ++r)
    for (std::size_t c = 0; c < class_count(); ++c) Z.at(r, c) = b_[c];
  gemm_nn(Xb, W_, Z, 1.0);
  Z.require_finite("LinearModel logits");
  return match_rank(std::move(Z), X);
}

DenseArray LinearModel::input_gradient(const DenseArray& X,
                                       const DenseArray& coeffs) const {
  DenseArray Xb = as_batch(X, dim(), "LinearModel::input_gradient");
  DenseArray Cb = as_batch(coeffs, class_count(), "LinearModel::input_gradient");
  if (Cb.rows() != Xb.rows())
    throw std::invalid_argument("LinearModel::input_gradient: batch mismatch");
  DenseArray G({Xb.rows(), dim()});
  gemm_nt(Cb, W_, G);  // coeffs·Wᵀ: rows are Σ_c coeffs_c · w_c
  return match_rank(std::move(G), X);
}

DenseArray RadialSpheresModel::logits(const DenseArray& X) const {
  DenseArray Xb = as_batch(X, dim_, "RadialSpheresModel::logits");
  DenseArray Z({Xb.rows(), 2});
  for (std::size_t r = 0; r < Xb.rows(); ++r) {
    double v = norm2(Xb.row(r)) - t_;
    Z.at(r, 0) = v;
    Z.at(r, 1) = -v;
  }
  return match_rank(std::move(Z), X);
}

DenseArray RadialSpheresModel::input_gradient(const DenseArray& X,
                                              const DenseArray& coeffs) const {
  DenseArray Xb = as_batch(X, dim_, "RadialSpheresModel::input_gradient");
  DenseArray Cb = as_batch(coeffs, 2, "RadialSpheresModel::input_gradient");
  if (Cb.rows() != Xb.rows())
    throw std::invalid_argument("RadialSpheresModel::input_gradient: batch mismatch");
  DenseArray G({Xb.rows(), dim_});
  for (std::size_t r = 0; r < Xb.rows(); ++r) {
    double nrm = norm2(Xb.row(r));
    double k = (Cb.at(r, 0) - Cb.at(r, 1)) / (nrm > 0 ? nrm : 1.0);
    for (std::size_t j = 0; j < dim_; ++j) G.row(r)[j] = k * Xb.row(r)[j];
  }
  return match_rank(std::move(G), X);
}

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("MlpModel: no layers");
  for (std::size_t l = 1; l < layers_.size(); ++l)
    if (layers_[l].W.cols() != layers_[l - 1].W.rows())
      throw std::invalid_argument("MlpModel: layer dimensions do not compose");
  if (class_count() < 2)
    throw std::invalid_argument("MlpModel: needs at least 2 logits");
}

MlpModel MlpModel::make(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                        std::size_t classes, Rng& rng) {
  std::vector<Layer> layers;
  std::size_t prev = in_dim;
  auto push = [&](std::size_t out) {
    Layer layer{DenseArray({out, prev}), DenseArray({out})};
    double bound = std::sqrt(6.0 / static_cast<double>(prev));
    for (std::size_t i = 0; i < layer.W.size(); ++i)
      layer.W[i] = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
    prev = out;
  };
  for (std::size_t h : hidden) push(h);
  push(classes);
  return MlpModel(std::move(layers));
}

std::size_t MlpModel::dim() const { return layers_.front().W.cols(); }
std::size_t MlpModel::class_count() const { return layers_.back().W.rows(); }

DenseArray MlpModel::logits(const DenseArray& X) const {
  DenseArray H = as_batch(X, dim(), "MlpModel::logits");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    DenseArray A({H.rows(), layer.W.rows()});
    gemm_nt(H, layer.W, A);
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t c = 0; c < A.cols(); ++c) A.at(r, c) += layer.b[c];
    if (l + 1 < layers_.size())
      for (std::size_t i = 0; i < A.size(); ++i) A[i] = A[i] > 0.0 ? A[i] : 0.0;
    H = std::move(A);
  }
  H.require_finite("MlpModel logits");
  return match_rank(std::move(H), X);
}

DenseArray MlpModel::input_gradient(const DenseArray& X,
                                    const DenseArray& coeffs) const {
  DenseArray Xb = as_batch(X, dim(), "MlpModel::input_gradient");
  DenseArray Cb = as_batch(coeffs, class_count(), "MlpModel::input_gradient");
  if (Cb.rows() != Xb.rows())
    throw std::invalid_argument("MlpModel::input_gradient: batch mismatch");

  // Forward, keeping the hidden-layer ReLU masks.
  std::vector<DenseArray> masks;  // one per hidden layer, post-activation sign
  DenseArray H = Xb;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    DenseArray A({H.rows(), layer.W.rows()});
    gemm_nt(H, layer.W, A);
    DenseArray mask({A.rows(), A.cols()});
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t c = 0; c < A.cols(); ++c) {
        double v = A.at(r, c) + layer.b[c];
        mask.at(r, c) = v > 0.0 ? 1.0 : 0.0;  // ReLU' at 0 is 0
        A.at(r, c) = v > 0.0 ? v : 0.0;
      }
    masks.push_back(std::move(mask));
    H = std::move(A);
  }

  // Reverse sweep: u ← (u·W_l) ⊙ mask, down to the input.
  DenseArray U = Cb;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    DenseArray S({U.rows(), layers_[l].W.cols()});
    gemm_nn(U, layers_[l].W, S);
    if (l > 0)
      for (std::size_t i = 0; i < S.size(); ++i) S[i] *= masks[l - 1][i];
    U = std::move(S);
  }
  return match_rank(std::move(U), X);
}

DenseArray softmax_rows(const DenseArray& logits) {
  DenseArray P = logits;
  for (std::size_t r = 0; r < P.rows(); ++r) {
    auto row = P.row(r);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return P;
}

double cross_entropy_mean(const DenseArray& logits,
                          const std::vector<std::uint32_t>& labels) {
  if (logits.rows() != labels.size())
    throw std::invalid_argument("cross_entropy_mean: batch mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : row) lse += std::exp(v - mx);
    total += std::log(lse) + mx - row[labels[r]];
  }
  return total / static_cast<double>(logits.rows());
}

DenseArray ce_logit_coeffs(const DenseArray& logits,
                           const std::vector<std::uint32_t>& labels) {
  DenseArray C = softmax_rows(logits);
  for (std::size_t r = 0; r < C.rows(); ++r) C.at(r, labels[r]) -= 1.0;
  return C;
}

double finite_diff_check(const Model& model, const DenseArray& x,
                         const DenseArray& coeffs, double step) {
  if (step <= 0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  DenseArray g = model.input_gradient(x, coeffs);
  DenseArray xp = x;
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double keep = xp[j];
    xp[j] = keep + step;
    DenseArray zp = model.logits(xp);
    xp[j] = keep - step;
    DenseArray zm = model.logits(xp);
    xp[j] = keep;
    double fd = 0.0;
    for (std::size_t c = 0; c < coeffs.size(); ++c)
      fd += coeffs[c] * (zp[c] - zm[c]);
    fd /= 2.0 * step;
    double denom = std::max({std::abs(fd), std::abs(g[j]), 1e-8});
    worst = std::max(worst, std::abs(fd - g[j]) / denom);
  }
  return worst;
}

}  // namespace gradalign
