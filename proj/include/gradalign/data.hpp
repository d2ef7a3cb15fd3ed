#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradalign/dense_array.hpp"
#include "gradalign/rng.hpp"

namespace gradalign {

// Column-wise sample store; per-sample views are cheap spans.
//
// Class-index convention for the binary synthetic sets (fixed by the analytic
// model's logit order): index 0 is synthetic class +1 (Spheres outer sphere
// r=1.3; Squares32 smaller square), index 1 is class −1 (inner sphere r=1.0;
// larger square). MNIST-3/5 relabels ascending: digit 3 ↦ 0, digit 5 ↦ 1.
struct Dataset {
  std::string name;
  std::size_t n = 0;
  std::size_t class_count = 0;
  std::vector<std::uint32_t> labels;
  std::vector<double> X;       // count×n row-major
  std::vector<double> deltas;  // empty, or count×n ground-truth Δx

  std::size_t count() const { return labels.size(); }
  bool has_delta() const { return !deltas.empty(); }
  std::span<const double> x_of(std::size_t i) const { return {X.data() + i * n, n}; }
  std::span<const double> delta_of(std::size_t i) const {
    return {deltas.data() + i * n, n};
  }
  // Rows [begin, begin+len) as a len×n batch.
  DenseArray batch_x(std::size_t begin, std::size_t len) const;
  Dataset slice(std::size_t begin, std::size_t len) const;
};

// Concentric spheres in `dim` dimensions: radius 1.3 ↦ class index 0,
// radius 1.0 ↦ class index 1, each with probability 1/2; every sample is a
// normalized Gaussian direction times its radius, with ground-truth Δx
// attached (the radial residual to the other sphere, ‖Δx‖ = 0.3).
// Sample i draws from Rng::child(seed, i), so any sub-range is reproducible
// independently of batching.
Dataset sample_spheres(std::size_t count, std::size_t dim, std::uint64_t seed);

// Samples [first, first+count) of the same per-index stream;
// sample_spheres(c, d, s) ≡ sample_spheres_range(0, c, d, s).
Dataset sample_spheres_range(std::size_t first, std::size_t count, std::size_t dim,
                             std::uint64_t seed);

// Δx for a point lying on either sphere (‖x‖ ∈ {1.0, 1.3} within 1e-9):
// 0.3·x from the inner sphere, −(0.3/1.3)·x from the outer.
DenseArray spheres_delta_x(const DenseArray& x);

struct SquaresConfig {
  std::size_t image_side = 32;
  std::size_t side_class_neg = 20;  // synthetic class −1 (label index 1)
  std::size_t side_class_pos = 13;  // synthetic class +1 (label index 0)
  double noise_std = 0.1;           // pre-blur Gaussian noise
  double blur_std = 2.0;            // Gaussian blur, kernel truncated at 4σ
  double background = -1.0;
  double foreground = 1.0;
};

// Centered-square images: background/foreground templates plus blurred
// Gaussian noise, clamped to [−1,1]. Δx is the noiseless template of the
// other class minus the own-class template (identical for all samples of a
// class); with default sides ‖Δx‖₂ = 2·√(20²−13²) = 2·√231.
Dataset gen_squares(std::size_t count, const SquaresConfig& cfg, std::uint64_t seed);

// Noiseless class template (used by gen_squares and by tests).
DenseArray squares_template(const SquaresConfig& cfg, std::uint32_t label);

// IDX ingestion (big-endian headers; image magic 0x00000803, label magic
// 0x00000801). Pixels map linearly [0,255] → [−1,1]. Throws BadMagicError /
// TruncatedError / CountMismatchError.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Keep only the listed labels, remapped to 0..k−1 in ascending order of the
// original label values; sample order preserved. Throws EmptyFilterError if
// nothing survives.
Dataset filter_classes(const Dataset& ds, const std::vector<std::uint32_t>& keep);

struct BadMagicError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CountMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyFilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gradalign
