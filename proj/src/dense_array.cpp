#include "gradalign/dense_array.hpp"

#include <cblas.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gradalign {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}
}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size())
    throw std::invalid_argument("DenseArray: shape/data length mismatch");
}

DenseArray DenseArray::vec(std::vector<double> values) {
  std::size_t n = values.size();
  return DenseArray({n}, std::move(values));
}

DenseArray DenseArray::mat(std::size_t rows, std::size_t cols,
                           std::vector<double> values) {
  return DenseArray({rows, cols}, std::move(values));
}

bool DenseArray::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void DenseArray::require_finite(const char* what) const {
  if (!all_finite())
    throw std::runtime_error(std::string("non-finite values in ") + what);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return cblas_ddot(static_cast<int>(a.size()), a.data(), 1, b.data(), 1);
}

double norm2(std::span<const double> a) {
  return cblas_dnrm2(static_cast<int>(a.size()), a.data(), 1);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  cblas_daxpy(static_cast<int>(x.size()), alpha, x.data(), 1, y.data(), 1);
}

void scale(double alpha, std::span<double> x) {
  cblas_dscal(static_cast<int>(x.size()), alpha, x.data(), 1);
}

namespace {
void check_gemm(std::size_t am, std::size_t ak, std::size_t bk, std::size_t bn,
                std::size_t cm, std::size_t cn, const char* which) {
  if (ak != bk || am != cm || bn != cn)
    throw std::invalid_argument(std::string("gemm shape mismatch in ") + which);
}
}  // namespace

void gemm_nt(const DenseArray& A, const DenseArray& B, DenseArray& C, double beta) {
  check_gemm(A.rows(), A.cols(), B.cols(), B.rows(), C.rows(), C.cols(), "gemm_nt");
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(A.rows()),
              static_cast<int>(B.rows()), static_cast<int>(A.cols()), 1.0, A.data(),
              static_cast<int>(A.cols()), B.data(), static_cast<int>(B.cols()), beta,
              C.data(), static_cast<int>(C.cols()));
}

void gemm_nn(const DenseArray& A, const DenseArray& B, DenseArray& C, double beta) {
  check_gemm(A.rows(), A.cols(), B.rows(), B.cols(), C.rows(), C.cols(), "gemm_nn");
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(A.rows()),
              static_cast<int>(B.cols()), static_cast<int>(A.cols()), 1.0, A.data(),
              static_cast<int>(A.cols()), B.data(), static_cast<int>(B.cols()), beta,
              C.data(), static_cast<int>(C.cols()));
}

void gemm_tn(const DenseArray& A, const DenseArray& B, DenseArray& C, double beta) {
  check_gemm(A.cols(), A.rows(), B.rows(), B.cols(), C.rows(), C.cols(), "gemm_tn");
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(A.cols()),
              static_cast<int>(B.cols()), static_cast<int>(A.rows()), 1.0, A.data(),
              static_cast<int>(A.cols()), B.data(), static_cast<int>(B.cols()), beta,
              C.data(), static_cast<int>(C.cols()));
}

}  // namespace gradalign
