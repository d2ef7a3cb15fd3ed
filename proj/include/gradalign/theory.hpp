#pragma once

#include <optional>
#include <vector>

#include "gradalign/alignment.hpp"
#include "gradalign/attacks.hpp"
#include "gradalign/data.hpp"
#include "gradalign/model.hpp"

namespace gradalign {

struct Theorem1Result {
  bool in_scope = false;  // pair satisfied {c*, m} = {i, j} at both points
  double rho_i = 0.0, rho_j = 0.0;
  double alpha = 0.0;     // cos(x_j − x_i, ∇logit_j − ∇logit_i)
  double residual = 0.0;  // |ρ_i + ρ_j − ‖x_j − x_i‖·α|
};

// Exact two-class reduction on a linear model: signed hyperplane distances
// ρ(x_i) = −(⟨x_i,w⟩+b)/‖w‖ and ρ(x_j) = +(⟨x_j,w⟩+b)/‖w‖ for w, b the
// class-j-minus-class-i weight/bias differences. The identity
// ρ_i + ρ_j = ‖x_j − x_i‖·α holds exactly; the precondition (the nearest
// other class and the prediction form {i,j} at both points) is checked, and
// out-of-scope pairs report in_scope = false rather than failing.
Theorem1Result verify_theorem1(const LinearModel& linear, const DenseArray& x_i,
                               const DenseArray& x_j, std::uint32_t i,
                               std::uint32_t j);

struct Theorem1Sweep {
  std::size_t trials = 0;        // in-scope pairs measured
  std::size_t filtered = 0;      // pairs rejected by the precondition
  double max_residual = 0.0;     // relative: res / (1 + |ρ_i| + |ρ_j|)
  double mean_residual = 0.0;
};

// Randomized exactness sweep: `trials` in-scope (model, pair) draws with
// n-dimensional, C-class Gaussian linear models.
Theorem1Sweep theorem1_sweep(std::size_t trials, std::size_t n, std::size_t C,
                             std::uint64_t seed);

struct SpheresEquality {
  double rho_m = 0.0;      // median attack-measured robustness (L2 bisection)
  double alpha_bar = 0.0;  // mean α_Δx
  double ratio = 0.0;      // rho_m / alpha_bar
  bool degenerate = false; // zero-gradient model: α forced to 0
};

// Numerical check of the spheres identity ρ_m = ‖Δx‖·ᾱ_Δx/2 (= 0.15 for
// the analytic radial model): per-sample flip distances via ε-bisection on
// deterministic L2 PGD, aggregated as the median.
SpheresEquality verify_spheres_equality(const Model& model, std::size_t sample_count,
                                        std::uint64_t seed);

// Per-sample (ρ̂ from the linearization, ρ from bisection-refined L2 PGD).
std::vector<std::pair<double, double>> linearity_survey(const Model& model,
                                                        const Dataset& ds,
                                                        std::size_t sample_count);

// Bisection-refined minimal flip radius under deterministic L2 PGD
// (12 halvings; doubling search for the initial bracket). Throws
// NoCrossingError when no flip is found below the radius cap.
double attack_robustness_l2(const Model& model, const DenseArray& x, std::uint32_t y,
                            double eta, int iterations, double radius_cap);

// Sample Pearson correlation; throws on length mismatch, < 2 points, or
// zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace gradalign
