#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gradalign/data.hpp"
#include "gradalign/model.hpp"
#include "gradalign/training.hpp"

namespace gradalign {

// Residual generator/discriminator pair for estimating Δx on binary data.
// G maps [x, onehot(target)] (n+2 inputs) to a residual Δx̂ (n outputs);
// the estimated cross-class point is x̂′ = x + Δx̂, clamped to the data
// range when one is set. D is a plain binary classifier on n inputs.
struct GanConfig {
  int epochs = 20;
  double lr = 1e-4;
  double lambda_g = 0.3;       // weight of CE(D(x̂′), ¬y) in the G loss
  double lambda_reg = 0.5;     // weight of mean ‖Δx̂‖₂/√n in the G loss
  double lambda_d_real = 1.0;  // weight of CE(D(x), y) in the D loss
  double lambda_d_adv = 0.01;  // weight of CE(D(x̂′), y); kept < lambda_d_real
  std::vector<std::size_t> hidden_g = {512, 512};
  std::vector<std::size_t> hidden_d = {512, 512};
  std::optional<std::pair<double, double>> clamp_range;
  std::uint64_t seed = 1;
};

struct GanEpochStats {
  int epoch = 0;  // 1-based
  double loss_d = 0.0, loss_g = 0.0;
  double d_clean_accuracy = 0.0;   // D on the clean val set
  double val_cos_mean = 0.0;       // mean cos(Δx, Δx̂) on val (NaN without Δx)
  double val_residual_mean = 0.0;  // mean ‖Δx̂‖₂ on val
};

struct GanResult {
  MlpModel generator;
  MlpModel discriminator;
  int best_epoch = 0;  // minimal loss_d + loss_g
  std::vector<GanEpochStats> history;
};

// Alternating 1:1 D-then-G Adam steps per batch. D minimizes
//   λ_Dx·CE(D(x), y) + λ_Dx̂′·CE(D(x̂′), y)          (G frozen)
// and G minimizes
//   λ_G·CE(D(x̂′), ¬y) + λ_RegG·mean ‖Δx̂‖₂/√n       (D frozen),
// with the clamp passed through as a straight-through mask (clipped
// coordinates receive zero gradient). Binary sources only.
GanResult train_gan(DataSource& source, const Dataset& val, const GanConfig& cfg);

// Δx̂ rows for a batch: G([x, onehot(¬y)]), with x̂′ = x + Δx̂ re-clamped to
// the range first so the returned residual is the one actually applied.
DenseArray generate_delta(const MlpModel& generator, const DenseArray& X,
                          const std::vector<std::uint32_t>& y,
                          const std::optional<std::pair<double, double>>& clamp_range);

// The generator's norm penalty: mean over rows of ‖Δx̂_b‖₂ / √n.
double residual_reg(const DenseArray& deltas);

struct GeneratorValidation {
  double cos_mean = 0.0, cos_std = 0.0;          // cos(Δx, Δx̂) per sample
  double residual_mean = 0.0, residual_std = 0.0;  // ‖Δx̂‖₂ per sample
};

// Per-sample comparison of generated residuals against the dataset's
// ground-truth Δx (which must be present); std uses the n−1 denominator.
GeneratorValidation validate_generator(
    const MlpModel& generator, const Dataset& ds,
    const std::optional<std::pair<double, double>>& clamp_range);

// CSV with header
// `epoch,loss_d,loss_g,d_clean_accuracy,val_cos_mean,val_residual_mean`.
void write_gan_history_csv(const std::vector<GanEpochStats>& history,
                           const std::string& path);

}  // namespace gradalign
