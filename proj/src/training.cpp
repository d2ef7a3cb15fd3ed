#include "gradalign/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gradalign/adam.hpp"
#include "gradalign/alignment.hpp"

namespace gradalign {

OnlineSpheresSource::OnlineSpheresSource(std::size_t dim, std::size_t per_epoch,
                                         std::size_t batch, std::uint64_t seed)
    : dim_(dim), per_epoch_(per_epoch), batch_(batch), seed_(seed) {
  if (batch_ == 0 || per_epoch_ < batch_)
    throw std::invalid_argument("OnlineSpheresSource: per_epoch must cover a batch");
}

void OnlineSpheresSource::fill_batch(int epoch, std::size_t index, DenseArray& X,
                                     std::vector<std::uint32_t>& y,
                                     DenseArray& deltas) {
  std::size_t first =
      static_cast<std::size_t>(epoch) * per_epoch_ + index * batch_;
  Dataset ds = sample_spheres_range(first, batch_, dim_, seed_);
  X = ds.batch_x(0, batch_);
  y = ds.labels;
  deltas = DenseArray({batch_, dim_}, std::move(ds.deltas));
}

FixedDatasetSource::FixedDatasetSource(Dataset ds, std::size_t batch,
                                       std::uint64_t seed)
    : ds_(std::move(ds)), batch_(batch), seed_(seed) {
  if (batch_ == 0 || ds_.count() < batch_)
    throw std::invalid_argument("FixedDatasetSource: dataset smaller than a batch");
}

void FixedDatasetSource::fill_batch(int epoch, std::size_t index, DenseArray& X,
                                    std::vector<std::uint32_t>& y,
                                    DenseArray& deltas) {
  if (perm_epoch_ != epoch) {
    perm_.resize(ds_.count());
    for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
    Rng rng = Rng::child(seed_, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = perm_.size() - 1; i > 0; --i)
      std::swap(perm_[i], perm_[rng.next_below(i + 1)]);
    perm_epoch_ = epoch;
  }
  std::size_t n = ds_.n;
  X = DenseArray({batch_, n});
  y.resize(batch_);
  if (ds_.has_delta())
    deltas = DenseArray({batch_, n});
  else
    deltas = DenseArray();
  for (std::size_t b = 0; b < batch_; ++b) {
    std::size_t row = perm_[index * batch_ + b];
    std::copy_n(ds_.X.data() + row * n, n, X.data() + b * n);
    y[b] = ds_.labels[row];
    if (ds_.has_delta())
      std::copy_n(ds_.deltas.data() + row * n, n, deltas.data() + b * n);
  }
}

double batch_alignment_and_grad(const DenseArray& deltas, const DenseArray& G,
                                DenseArray& Q_out) {
  std::size_t B = G.rows(), n = G.cols();
  if (deltas.rows() != B || deltas.cols() != n)
    throw std::invalid_argument("batch_alignment_and_grad: shape mismatch");
  Q_out = DenseArray({B, n});
  double sum = 0.0;
  double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    auto u = deltas.row(b);
    auto g = G.row(b);
    double nu = norm2(u), ng = norm2(g);
    if (nu < 1e-12 || ng < 1e-12) continue;  // guarded cos: value 0, slope 0
    double D = nu * ng + 1e-12;
    double s = dot(u, g);
    sum += s / D;
    // ∂(s/D)/∂g = u/D − s·nu·g/(ng·D²), scaled by the batch mean.
    double cu = inv_b / D;
    double cg = -inv_b * s * nu / (ng * D * D);
    auto q = Q_out.row(b);
    for (std::size_t j = 0; j < n; ++j) q[j] = cu * u[j] + cg * g[j];
  }
  return sum * inv_b;
}

namespace {

double val_accuracy_of(const Model& model, const Dataset& val) {
  std::vector<std::uint32_t> pred = predict(model, val.batch_x(0, val.count()));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < val.count(); ++i) ok += pred[i] == val.labels[i];
  return static_cast<double>(ok) / static_cast<double>(val.count());
}

// Coefficient rows e_{c̃} − e_y for a recorded batch (c̃ = ¬y for binary
// heads, nearest-boundary class otherwise).
DenseArray penalty_coeffs(const MlpModel& model, const DenseArray& X,
                          const std::vector<std::uint32_t>& y) {
  std::size_t B = X.rows(), C = model.class_count();
  DenseArray V({B, C});
  for (std::size_t b = 0; b < B; ++b) {
    std::uint32_t ct;
    if (C == 2) {
      ct = 1u - y[b];
    } else {
      DenseArray x({X.cols()},
                   std::vector<double>(X.row(b).begin(), X.row(b).end()));
      ct = tilde_c(model, x, y[b]);
    }
    V.at(b, ct) += 1.0;
    V.at(b, y[b]) -= 1.0;
  }
  return V;
}

}  // namespace

TrainResult train_mlp(const MlpModel& init, DataSource& source, const Dataset& val,
                      const TrainConfig& cfg) {
  bool penalized = cfg.method == Method::align_penalty && cfg.lambda_alpha != 0.0;
  if (penalized && !source.has_delta())
    throw std::invalid_argument("train_mlp: alignment penalty needs Δx in the source");
  if (val.count() == 0) throw std::invalid_argument("train_mlp: empty val set");

  TrainResult result;
  result.model = init;
  if (cfg.epochs <= 0) return result;

  MlpModel model = init;
  AdamState opt = AdamState::zeros_like(model.layers());
  std::size_t batches = source.batches_per_epoch();
  if (batches == 0) throw std::invalid_argument("train_mlp: no batches per epoch");

  std::vector<double> grid =
      log_grid_with_zero(cfg.eps_ref / 10.0, 10.0 * cfg.eps_ref, 7);
  Dataset val_sub = val.slice(0, std::min(cfg.val_attack_count, val.count()));

  double best = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    DenseArray X, deltas;
    std::vector<std::uint32_t> y;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      source.fill_batch(epoch - 1, bi, X, y, deltas);
      auto context = [&](const char* what) {
        return TrainingDivergedError("train_mlp: epoch " + std::to_string(epoch) +
                                     " batch " + std::to_string(bi) + ": " + what);
      };
      try {
        if (cfg.method == Method::pgd) {
          AttackConfig atk = cfg.pgd;
          atk.seed = cfg.pgd.seed + 1 +
                     static_cast<std::uint64_t>(epoch - 1) * batches + bi;
          X = pgd_attack(model, X, y, atk);
        }
        Tape tape = mlp_record(model, X);
        double loss = cross_entropy_mean(tape.logits, y);
        DenseArray dZ = ce_logit_coeffs(tape.logits, y);
        scale(1.0 / static_cast<double>(X.rows()), {dZ.data(), dZ.size()});
        Grads grads = Grads::zeros_like(model);
        mlp_backward(model, tape, dZ, grads);
        if (penalized) {
          DenseArray V = penalty_coeffs(model, X, y);
          GradChain chain = mlp_input_grad_record(model, tape, V);
          DenseArray Q;
          double mean_cos = batch_alignment_and_grad(deltas, chain.g, Q);
          loss -= cfg.lambda_alpha * mean_cos;
          scale(-cfg.lambda_alpha, {Q.data(), Q.size()});
          mlp_double_backward(model, tape, chain, Q, grads);
        }
        if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss");
        adam_step(model.layers(), grads, opt, cfg.lr);
        loss_sum += loss;
      } catch (const TrainingDivergedError&) {
        throw;
      } catch (const std::runtime_error& err) {
        throw context(err.what());
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(batches);
    st.val_accuracy = val_accuracy_of(model, val);

    CurveConfig cc;
    cc.eta = 0.0;  // per-ε scaled step
    cc.iterations = cfg.pgd.iterations;
    cc.random_start = true;
    cc.clamp_range = cfg.pgd.clamp_range;
    cc.seed = cfg.seed ^ 0x56414cull;
    RobustnessCurve curve =
        robustness_curve(model, val_sub, AttackKind::pgd_inf, grid, cc);
    try {
      st.val_eps50 = epsilon_50(curve);
    } catch (const NoCrossingError&) {
      st.val_eps50 = grid.back();
    }

    if (val_sub.has_delta()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < val_sub.count(); ++i) {
        DenseArray x({val_sub.n}, std::vector<double>(val_sub.x_of(i).begin(),
                                                      val_sub.x_of(i).end()));
        acc += alpha_delta_x(model, x, val_sub.labels[i], val_sub.delta_of(i));
      }
      st.val_alpha_dx = acc / static_cast<double>(val_sub.count());
    } else {
      st.val_alpha_dx = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(st);

    double metric =
        cfg.select_by == ValMetric::accuracy ? st.val_accuracy : st.val_eps50;
    if (metric > best) {
      best = metric;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,train_loss,val_accuracy,val_eps50,val_alpha_dx\n";
  char buf[160];
  for (const auto& st : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", st.epoch,
                  st.train_loss, st.val_accuracy, st.val_eps50, st.val_alpha_dx);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace gradalign
