#include "gradalign/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gradalign/adam.hpp"
#include "gradalign/alignment.hpp"

namespace gradalign {

namespace {

// [x, onehot(¬y)] rows for the generator.
DenseArray generator_input(const DenseArray& X, const std::vector<std::uint32_t>& y) {
  std::size_t B = X.rows(), n = X.cols();
  DenseArray Z({B, n + 2});
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(X.data() + b * n, n, Z.data() + b * (n + 2));
    Z.at(b, n) = 0.0;
    Z.at(b, n + 1) = 0.0;
    Z.at(b, n + (1u - y[b])) = 1.0;
  }
  return Z;
}

// Clamps x̂′ in place and returns the pass-through mask (0 where clipped).
DenseArray apply_clamp(DenseArray& xhat,
                       const std::optional<std::pair<double, double>>& range) {
  DenseArray mask({xhat.rows(), xhat.cols()});
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = 1.0;
  if (range) {
    for (std::size_t k = 0; k < xhat.size(); ++k) {
      double v = std::clamp(xhat[k], range->first, range->second);
      if (v != xhat[k]) {
        xhat[k] = v;
        mask[k] = 0.0;
      }
    }
  }
  return mask;
}

std::vector<std::uint32_t> flipped(const std::vector<std::uint32_t>& y) {
  std::vector<std::uint32_t> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = 1u - y[i];
  return out;
}

}  // namespace

double residual_reg(const DenseArray& deltas) {
  if (deltas.rank() != 2 || deltas.rows() == 0)
    throw std::invalid_argument("residual_reg: non-empty matrix expected");
  double sqn = std::sqrt(static_cast<double>(deltas.cols()));
  double sum = 0.0;
  for (std::size_t b = 0; b < deltas.rows(); ++b) sum += norm2(deltas.row(b)) / sqn;
  return sum / static_cast<double>(deltas.rows());
}

DenseArray generate_delta(const MlpModel& generator, const DenseArray& X,
                          const std::vector<std::uint32_t>& y,
                          const std::optional<std::pair<double, double>>& clamp_range) {
  DenseArray Xb = X.rank() == 1
                      ? DenseArray::mat(1, X.size(),
                                        std::vector<double>(X.data(), X.data() + X.size()))
                      : X;
  DenseArray delta = generator.logits(generator_input(Xb, y));
  DenseArray xhat = Xb;
  for (std::size_t k = 0; k < xhat.size(); ++k) xhat[k] += delta[k];
  apply_clamp(xhat, clamp_range);
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = xhat[k] - Xb[k];
  return delta;
}

GeneratorValidation validate_generator(
    const MlpModel& generator, const Dataset& ds,
    const std::optional<std::pair<double, double>>& clamp_range) {
  if (!ds.has_delta())
    throw std::invalid_argument("validate_generator: dataset carries no Δx");
  DenseArray delta =
      generate_delta(generator, ds.batch_x(0, ds.count()), ds.labels, clamp_range);
  std::vector<double> cs(ds.count()), ns(ds.count());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    cs[i] = cosine_sim(ds.delta_of(i), delta.row(i));
    ns[i] = norm2(delta.row(i));
  }
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>{m, s};
  };
  GeneratorValidation out;
  std::tie(out.cos_mean, out.cos_std) = mean_std(cs);
  std::tie(out.residual_mean, out.residual_std) = mean_std(ns);
  return out;
}

GanResult train_gan(DataSource& source, const Dataset& val, const GanConfig& cfg) {
  if (source.class_count() != 2)
    throw std::invalid_argument("train_gan: binary sources only");
  if (cfg.lambda_d_adv >= cfg.lambda_d_real)
    throw std::invalid_argument("train_gan: lambda_d_adv must stay below lambda_d_real");
  std::size_t n = source.dim();

  Rng init_rng = Rng::child(cfg.seed, 0);
  GanResult result;
  result.generator = MlpModel::make(n + 2, cfg.hidden_g, n, init_rng);
  // Shrink the generator's output layer so training starts from a near-zero
  // residual. A full-scale init puts x̂′ = x + Δx̂ far off the data manifold,
  // where D's labels are unanchored extrapolation and G ends up racing D
  // through empty space (residual norms grow without the cosine improving).
  // Starting on-manifold, the fooling gradient follows the real class
  // geometry, and the first crossing G reaches is also the nearest one —
  // the solution the norm penalty is there to select.
  scale(0.1, {result.generator.layers().back().W.data(),
              result.generator.layers().back().W.size()});
  result.discriminator = MlpModel::make(n, cfg.hidden_d, 2, init_rng);
  MlpModel G = result.generator, D = result.discriminator;
  AdamState opt_g = AdamState::zeros_like(G.layers());
  AdamState opt_d = AdamState::zeros_like(D.layers());

  std::size_t batches = source.batches_per_epoch();
  if (batches == 0) throw std::invalid_argument("train_gan: no batches per epoch");
  double sqn = std::sqrt(static_cast<double>(n));
  double best = std::numeric_limits<double>::infinity();
  bool g_live = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double dsum = 0.0, gsum = 0.0;
    DenseArray X, unused_delta;
    std::vector<std::uint32_t> y;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      source.fill_batch(epoch - 1, bi, X, y, unused_delta);
      std::size_t B = X.rows();
      double inv_b = 1.0 / static_cast<double>(B);
      std::vector<std::uint32_t> target = flipped(y);

      try {
        // --- D step (G frozen): classify both x and x̂′ as y. ---
        DenseArray xhat = X;
        {
          DenseArray delta = G.logits(generator_input(X, y));
          for (std::size_t k = 0; k < xhat.size(); ++k) xhat[k] += delta[k];
          apply_clamp(xhat, cfg.clamp_range);
        }
        Grads gd = Grads::zeros_like(D);
        Tape t_real = mlp_record(D, X);
        Tape t_adv = mlp_record(D, xhat);
        double loss_d = cfg.lambda_d_real * cross_entropy_mean(t_real.logits, y) +
                        cfg.lambda_d_adv * cross_entropy_mean(t_adv.logits, y);
        DenseArray dz = ce_logit_coeffs(t_real.logits, y);
        scale(cfg.lambda_d_real * inv_b, {dz.data(), dz.size()});
        mlp_backward(D, t_real, dz, gd);
        dz = ce_logit_coeffs(t_adv.logits, y);
        scale(cfg.lambda_d_adv * inv_b, {dz.data(), dz.size()});
        mlp_backward(D, t_adv, dz, gd);
        if (!std::isfinite(loss_d)) throw std::runtime_error("non-finite D loss");
        adam_step(D.layers(), gd, opt_d, cfg.lr);
        dsum += loss_d;

        // --- G step (D frozen): push x̂′ across D toward ¬y, small ‖Δx̂‖. ---
        Tape t_g = mlp_record(G, generator_input(X, y));
        const DenseArray& delta = t_g.logits;  // B×n residual
        xhat = X;
        for (std::size_t k = 0; k < xhat.size(); ++k) xhat[k] += delta[k];
        DenseArray mask = apply_clamp(xhat, cfg.clamp_range);
        Tape t_d = mlp_record(D, xhat);
        double loss_g = cfg.lambda_g * cross_entropy_mean(t_d.logits, target);
        dz = ce_logit_coeffs(t_d.logits, target);
        scale(cfg.lambda_g * inv_b, {dz.data(), dz.size()});
        Grads scratch = Grads::zeros_like(D);
        DenseArray d_xhat;
        mlp_backward(D, t_d, dz, scratch, &d_xhat);

        DenseArray d_delta({B, n});
        for (std::size_t b = 0; b < B; ++b) {
          auto drow = delta.row(b);
          double nrm = norm2(drow);
          double coef = nrm < 1e-12 ? 0.0 : cfg.lambda_reg * inv_b / (sqn * nrm);
          for (std::size_t j = 0; j < n; ++j) {
            d_delta.at(b, j) =
                d_xhat.at(b, j) * mask.at(b, j) + coef * drow[j];
          }
        }
        loss_g += cfg.lambda_reg * residual_reg(delta);
        if (!std::isfinite(loss_g)) throw std::runtime_error("non-finite G loss");
        // G stays frozen until D has sharpened (see below). While D's margins
        // are still soft, its decision surface off the data manifold is
        // unanchored extrapolation: G drifts through it faster than D can
        // learn the real geometry and the pair races in empty space. Worse,
        // a soft D brakes G too late — the saturated region only starts far
        // beyond the opposite class, so G overshoots the nearest crossing.
        // Once D's margins are sharp, the cross-entropy plateau begins right
        // at the class boundary, and the fooling gradient parks x̂′ on the
        // nearest crossing — the solution the norm penalty selects.
        if (g_live) {
          Grads gg = Grads::zeros_like(G);
          mlp_backward(G, t_g, d_delta, gg);
          adam_step(G.layers(), gg, opt_g, cfg.lr);
        }
        gsum += loss_g;
      } catch (const std::runtime_error& err) {
        throw TrainingDivergedError("train_gan: epoch " + std::to_string(epoch) +
                                    " batch " + std::to_string(bi) + ": " +
                                    err.what());
      }
    }

    GanEpochStats st;
    st.epoch = epoch;
    st.loss_d = dsum / static_cast<double>(batches);
    st.loss_g = gsum / static_cast<double>(batches);
    // Release G once D's supervised loss shows sharp margins, or at the
    // halfway point as a backstop so G always gets training time.
    if (!g_live && (st.loss_d < 0.1 || 2 * epoch >= cfg.epochs)) g_live = true;
    {
      std::vector<std::uint32_t> pred = predict(D, val.batch_x(0, val.count()));
      std::size_t ok = 0;
      for (std::size_t i = 0; i < val.count(); ++i) ok += pred[i] == val.labels[i];
      st.d_clean_accuracy = static_cast<double>(ok) / static_cast<double>(val.count());
    }
    if (val.has_delta()) {
      GeneratorValidation gv = validate_generator(G, val, cfg.clamp_range);
      st.val_cos_mean = gv.cos_mean;
      st.val_residual_mean = gv.residual_mean;
    } else {
      DenseArray delta =
          generate_delta(G, val.batch_x(0, val.count()), val.labels, cfg.clamp_range);
      double acc = 0.0;
      for (std::size_t i = 0; i < val.count(); ++i) acc += norm2(delta.row(i));
      st.val_cos_mean = std::numeric_limits<double>::quiet_NaN();
      st.val_residual_mean = acc / static_cast<double>(val.count());
    }
    result.history.push_back(st);

    if (st.loss_d + st.loss_g < best) {
      best = st.loss_d + st.loss_g;
      result.generator = G;
      result.discriminator = D;
      result.best_epoch = epoch;
    }
  }
  return result;
}

void write_gan_history_csv(const std::vector<GanEpochStats>& history,
                           const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,loss_d,loss_g,d_clean_accuracy,val_cos_mean,val_residual_mean\n";
  char buf[200];
  for (const auto& st : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", st.epoch,
                  st.loss_d, st.loss_g, st.d_clean_accuracy, st.val_cos_mean,
                  st.val_residual_mean);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace gradalign
