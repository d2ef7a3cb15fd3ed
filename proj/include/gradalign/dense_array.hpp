#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gradalign {

// Contiguous row-major f64 tensor with shape metadata. Rank 1 and 2 cover
// every quantity in the project (vectors, batches, weight matrices).
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> values);

  static DenseArray vec(std::vector<double> values);
  static DenseArray mat(std::size_t rows, std::size_t cols,
                        std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  // 2-D accessors; a rank-1 array acts as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : size(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  bool all_finite() const;
  // Throws std::runtime_error naming `what` when a NaN/Inf is present.
  void require_finite(const char* what) const;

  bool operator==(const DenseArray&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Small vector helpers used throughout (n is implicit via spans).
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

// C = A·Bᵀ (A: m×k, B: n×k, C: m×n) and C = A·B (A: m×k, B: k×n), both
// row-major, accumulating C = beta·C + product. Thin wrappers over dgemm.
void gemm_nt(const DenseArray& A, const DenseArray& B, DenseArray& C,
             double beta = 0.0);
void gemm_nn(const DenseArray& A, const DenseArray& B, DenseArray& C,
             double beta = 0.0);
// C = Aᵀ·B (A: k×m, B: k×n, C: m×n).
void gemm_tn(const DenseArray& A, const DenseArray& B, DenseArray& C,
             double beta = 0.0);

}  // namespace gradalign
