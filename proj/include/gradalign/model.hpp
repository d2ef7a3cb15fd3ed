#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gradalign/dense_array.hpp"
#include "gradalign/rng.hpp"

namespace gradalign {

// Differentiable classifier contract. Both entry points are batched: X is
// B×n (or a rank-1 array treated as one row) and results keep the batch
// shape. m(x) = argmax of logits, ties toward the smaller class index.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t class_count() const = 0;
  // B×n -> B×C, all finite (throws otherwise).
  virtual DenseArray logits(const DenseArray& X) const = 0;
  // Row-wise ∇_x ⟨coeffs_b, logits(x_b)⟩: (B×n, B×C) -> B×n.
  virtual DenseArray input_gradient(const DenseArray& X,
                                    const DenseArray& coeffs) const = 0;
};

std::uint32_t argmax_row(std::span<const double> v);
// Predicted classes for a batch.
std::vector<std::uint32_t> predict(const Model& model, const DenseArray& X);

// logits(x) = Wᵀx + b with W stored n×C (columns are class gradients).
class LinearModel : public Model {
 public:
  LinearModel(DenseArray W, DenseArray b);
  std::size_t dim() const override { return W_.rows(); }
  std::size_t class_count() const override { return W_.cols(); }
  DenseArray logits(const DenseArray& X) const override;
  DenseArray input_gradient(const DenseArray& X,
                            const DenseArray& coeffs) const override;
  const DenseArray& W() const { return W_; }
  const DenseArray& b() const { return b_; }

 private:
  DenseArray W_;  // n×C
  DenseArray b_;  // C
};

// Analytic optimal classifier for the concentric-spheres data:
// logits(x) = (‖x‖₂ − t, t − ‖x‖₂) with t = 1.15. Class index 0 is the
// outer sphere (radius 1.3), index 1 the inner (radius 1.0); the decision
// boundary is the radius-t sphere and the margin to either sphere is 0.15.
class RadialSpheresModel : public Model {
 public:
  explicit RadialSpheresModel(std::size_t dim, double threshold = 1.15)
      : dim_(dim), t_(threshold) {}
  std::size_t dim() const override { return dim_; }
  std::size_t class_count() const override { return 2; }
  DenseArray logits(const DenseArray& X) const override;
  DenseArray input_gradient(const DenseArray& X,
                            const DenseArray& coeffs) const override;
  double threshold() const { return t_; }

 private:
  std::size_t dim_;
  double t_;
};

struct Layer {
  DenseArray W;  // out×in
  DenseArray b;  // out
};

// Fully connected ReLU network: ReLU on hidden layers, identity on the
// output layer; always ≥ 2 logits (binary problems use two).
class MlpModel : public Model {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<Layer> layers);
  // Kaiming-uniform fan-in init (U(±√(6/fan_in))), zero biases.
  static MlpModel make(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                       std::size_t classes, Rng& rng);

  std::size_t dim() const override;
  std::size_t class_count() const override;
  DenseArray logits(const DenseArray& X) const override;
  DenseArray input_gradient(const DenseArray& X,
                            const DenseArray& coeffs) const override;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::vector<Layer> layers_;
};

// Stable row-wise softmax (B×C -> B×C).
DenseArray softmax_rows(const DenseArray& logits);
// Mean cross-entropy over the batch.
double cross_entropy_mean(const DenseArray& logits,
                          const std::vector<std::uint32_t>& labels);
// Row-wise (softmax − onehot): the CE logit gradient, unscaled by 1/B.
DenseArray ce_logit_coeffs(const DenseArray& logits,
                           const std::vector<std::uint32_t>& labels);

// Max relative error of input_gradient vs central finite differences with
// the given step, probing every coordinate of x (rank-1 input).
double finite_diff_check(const Model& model, const DenseArray& x,
                         const DenseArray& coeffs, double step);

}  // namespace gradalign
