#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradalign/attacks.hpp"
#include "gradalign/data.hpp"
#include "gradalign/model.hpp"
#include "gradalign/tape.hpp"

namespace gradalign {

// The three training regimes compared throughout the project:
//   baseline      — plain cross-entropy;
//   pgd           — cross-entropy on PGD-perturbed batches;
//   align_penalty — cross-entropy minus λ_α · mean cos(Δx, ∇ℓ(x)), the
//                   penalty differentiated exactly through the input
//                   gradient (double backprop with the ReLU masks fixed).
enum class Method { baseline, pgd, align_penalty };

enum class ValMetric { accuracy, eps50 };

struct TrainConfig {
  Method method = Method::baseline;
  int epochs = 10;
  double lr = 1e-4;
  double lambda_alpha = 0.0;  // alignment-penalty weight (align_penalty only)
  AttackConfig pgd;           // training attack (pgd only); random_start on
  // Per-epoch validation: accuracy on the whole val set, plus an L∞-PGD ε₅₀
  // over the first `val_attack_count` samples on an 8-point grid
  // {0} ∪ 7 log-spaced in [eps_ref/10, 10·eps_ref].
  double eps_ref = 0.005;
  std::size_t val_attack_count = 200;
  ValMetric select_by = ValMetric::eps50;
  std::uint64_t seed = 1;  // drives batch order / online draws, not the init
};

// Batch provider; training never touches sample storage directly, so online
// (freshly sampled every epoch) and fixed (reshuffled every epoch) data run
// through one loop.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t batch_size() const = 0;
  virtual std::size_t batches_per_epoch() const = 0;
  virtual bool has_delta() const = 0;
  // Fills the batch for (epoch, index): X as B×n, y of length B, and — when
  // has_delta() — deltas as B×n (left empty otherwise).
  virtual void fill_batch(int epoch, std::size_t index, DenseArray& X,
                          std::vector<std::uint32_t>& y, DenseArray& deltas) = 0;
};

// Fresh concentric-spheres draws every epoch; batch b of epoch e serves the
// stream indices [e·per_epoch + b·B, …), so no sample is ever reused.
class OnlineSpheresSource final : public DataSource {
 public:
  OnlineSpheresSource(std::size_t dim, std::size_t per_epoch, std::size_t batch,
                      std::uint64_t seed);
  std::size_t dim() const override { return dim_; }
  std::size_t class_count() const override { return 2; }
  std::size_t batch_size() const override { return batch_; }
  std::size_t batches_per_epoch() const override { return per_epoch_ / batch_; }
  bool has_delta() const override { return true; }
  void fill_batch(int epoch, std::size_t index, DenseArray& X,
                  std::vector<std::uint32_t>& y, DenseArray& deltas) override;

 private:
  std::size_t dim_, per_epoch_, batch_;
  std::uint64_t seed_;
};

// A fixed dataset reshuffled once per epoch (Fisher–Yates driven by
// Rng::child(seed, epoch)); the trailing partial batch is dropped.
class FixedDatasetSource final : public DataSource {
 public:
  FixedDatasetSource(Dataset ds, std::size_t batch, std::uint64_t seed);
  std::size_t dim() const override { return ds_.n; }
  std::size_t class_count() const override { return ds_.class_count; }
  std::size_t batch_size() const override { return batch_; }
  std::size_t batches_per_epoch() const override { return ds_.count() / batch_; }
  bool has_delta() const override { return ds_.has_delta(); }
  void fill_batch(int epoch, std::size_t index, DenseArray& X,
                  std::vector<std::uint32_t>& y, DenseArray& deltas) override;

 private:
  Dataset ds_;
  std::size_t batch_;
  std::uint64_t seed_;
  int perm_epoch_ = -1;
  std::vector<std::size_t> perm_;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_eps50 = 0.0;    // capped at the top of the grid when uncrossed
  double val_alpha_dx = 0.0; // NaN when the val set carries no Δx
};

struct TrainResult {
  MlpModel model;  // snapshot of the best epoch under cfg.select_by
  int best_epoch = 0;
  std::vector<EpochStats> history;
};

struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs cfg.epochs of Adam over `source`, validating on `val` after every
// epoch; returns the best-epoch snapshot. The alignment penalty requires
// source.has_delta(). Throws TrainingDivergedError (with epoch/batch
// context) when a non-finite loss or gradient appears.
TrainResult train_mlp(const MlpModel& init, DataSource& source, const Dataset& val,
                      const TrainConfig& cfg);

// Mean cos(Δx_b, ∇ℓ(x_b)) of a recorded batch and, via `Q_out` (B×n), the
// derivative of that mean w.r.t. the input-gradient rows g_b — the hook the
// double-backprop pass consumes. Rows with ‖g‖ < 1e-12 contribute 0 with a
// zero derivative.
double batch_alignment_and_grad(const DenseArray& deltas, const DenseArray& G,
                                DenseArray& Q_out);

// CSV with header `epoch,train_loss,val_accuracy,val_eps50,val_alpha_dx`.
void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path);

}  // namespace gradalign
