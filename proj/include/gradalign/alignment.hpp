#pragma once

#include <span>
#include <vector>

#include "gradalign/data.hpp"
#include "gradalign/model.hpp"

namespace gradalign {

// ⟨u,v⟩ / (‖u‖‖v‖ + 1e-12); 0 when either norm is below 1e-12.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// The non-label class whose linearized decision boundary is closest to x:
// argmin over c ≠ y of |logit_y − logit_c| / ‖∇logit_y − ∇logit_c‖₂, ties
// toward the smaller index. Binary models return ¬y directly. Throws
// DegenerateModelError when every candidate has a zero gradient difference.
std::uint32_t tilde_c(const Model& model, const DenseArray& x, std::uint32_t y);

// ∇_x (logit_{c̃(x)} − logit_y), with c̃ held fixed (no gradient through the
// argmin selection).
DenseArray ell_gradient(const Model& model, const DenseArray& x, std::uint32_t y);

// cos(Δx, ∇ℓ(x)) — the alignment of the loss-gradient direction with the
// ground-truth residual toward the nearest other-class support.
double alpha_delta_x(const Model& model, const DenseArray& x, std::uint32_t y,
                     std::span<const double> delta_x);

// |⟨x, ∇logit_{m(x)}⟩| / (‖x‖‖∇logit_{m(x)}‖ + 1e-12) ∈ [0,1]. Throws on a
// zero input vector.
double alpha_x_baseline(const Model& model, const DenseArray& x);

// Linearized robustness ρ̂(x) = min over c ≠ y of
// |logit_y − logit_c| / ‖∇logit_y − ∇logit_c‖₂, negated when m(x) ≠ y.
double lemma1_robustness(const Model& model, const DenseArray& x, std::uint32_t y);

struct DegenerateModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlignmentRecord {
  std::size_t index;
  std::uint32_t y, m_x, tilde_c;
  double alpha_dx, alpha_x, rho_lemma1;
};

struct AlignmentReport {
  std::vector<AlignmentRecord> records;
  double alpha_dx_mean = 0.0, alpha_dx_std = 0.0;
  double alpha_x_mean = 0.0, alpha_x_std = 0.0;
};

// Element-wise application of the metrics above over a dataset with Δx
// (ground-truth or attached estimates). Std is the sample standard
// deviation (n−1 denominator; 0 for a single record).
AlignmentReport evaluate_alignment(const Model& model, const Dataset& ds);

// CSV with header `index,y,m_x,tilde_c,alpha_dx,alpha_x,rho_lemma1`.
void write_alignment_csv(const AlignmentReport& report, const std::string& path);

}  // namespace gradalign
