#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gradalign/data.hpp"
#include "gradalign/model.hpp"

namespace gradalign {

enum class Norm { inf, two };

struct AttackConfig {
  Norm norm = Norm::inf;
  double epsilon = 0.0;
  double eta = 0.0;   // for norm=two the effective step is eta·√n
  int iterations = 40;
  bool random_start = true;
  std::optional<std::pair<double, double>> clamp_range;  // data range, if any
  std::uint64_t seed = 0;
};

// Batched PGD ascent on softmax cross-entropy. Row b draws its random start
// from Rng::child(cfg.seed, b); after every step the perturbation is
// projected back into the ε-ball and, when clamp_range is set, the iterate
// into the data range. Deterministic when random_start is off.
DenseArray pgd_attack(const Model& model, const DenseArray& X,
                      const std::vector<std::uint32_t>& y, const AttackConfig& cfg);

struct SquareAttackConfig {
  double epsilon = 0.0;
  int queries = 5000;
  double p_init = 0.8;
  std::size_t img_h = 0, img_w = 0;  // image view; img_h·img_w == n
  std::optional<std::pair<double, double>> clamp_range;
  std::uint64_t seed = 0;
};

// Score-based random search under L∞ (the model is used through logits
// only): vertical ±ε stripe init, then single-sign square patches whose
// side follows round(√(p·h·w)) with p halving at query milestones
// ({10,50,200,500,1000,2000,4000,6000,8000} rescaled by queries/10000);
// a candidate is kept iff the margin logit_y − max_{c≠y} logit_c strictly
// decreases; a sample stops once misclassified. Per-sample child streams.
DenseArray square_attack(const Model& model, const DenseArray& X,
                         const std::vector<std::uint32_t>& y,
                         const SquareAttackConfig& cfg);

enum class AttackKind { pgd_inf, pgd_l2, square };

std::string attack_kind_name(AttackKind kind);

// Square Attack schedule pieces, exposed for direct verification: the
// halving milestones rescaled from the reference 10000-query budget, the
// patch fraction in effect at query q (1-based), and the patch side
// round(√(p·h·w)) clamped to [1, min(h,w)].
std::vector<int> square_milestones(int queries);
double square_p_at(int query, int queries, double p_init);
std::size_t square_side(double p, std::size_t h, std::size_t w);

struct CurveConfig {
  double eta = 0.0;  // PGD step floor; raised per grid-ε so k steps cover 2.5·ε
  int iterations = 40;
  bool random_start = true;
  std::optional<std::pair<double, double>> clamp_range;
  std::uint64_t seed = 0;
  // Square Attack extras:
  int square_queries = 5000;
  double p_init = 0.8;
  std::size_t img_h = 0, img_w = 0;
};

struct RobustnessCurve {
  std::vector<std::pair<double, double>> points;  // (ε, accuracy), ε ascending
  std::string attack;
};

// Accuracy after attacking every sample at each grid ε (grid ascending,
// starting at 0). Success is cumulative: a perturbation within a smaller
// ball is feasible in every larger one, so a sample broken at ε' stays
// broken for ε > ε' — making the curve non-increasing by construction.
RobustnessCurve robustness_curve(const Model& model, const Dataset& ds,
                                 AttackKind kind, const std::vector<double>& grid,
                                 const CurveConfig& cfg);

// First crossing of accuracy = 0.5, linearly interpolated; exact ties
// resolve to the smallest ε with accuracy ≤ 0.5.
double epsilon_50(const RobustnessCurve& curve);

struct NoCrossingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// {0} followed by `points` log-spaced values over [lo, hi].
std::vector<double> log_grid_with_zero(double lo, double hi, std::size_t points);

}  // namespace gradalign
