#include "gradalign/theory.hpp"

#include <algorithm>
#include <cmath>

#include "gradalign/threads.hpp"

namespace gradalign {

namespace {

// c*(x): the nearest-boundary class relative to the model's own prediction.
std::uint32_t c_star(const Model& model, const DenseArray& x) {
  DenseArray z = model.logits(x);
  return tilde_c(model, x, argmax_row({z.data(), z.size()}));
}

}  // namespace

Theorem1Result verify_theorem1(const LinearModel& linear, const DenseArray& x_i,
                               const DenseArray& x_j, std::uint32_t i,
                               std::uint32_t j) {
  std::size_t n = linear.dim();
  if (i == j || i >= linear.class_count() || j >= linear.class_count())
    throw std::invalid_argument("verify_theorem1: bad class pair");

  Theorem1Result res;
  // Ordered precondition: x_i predicted i with j its nearest other class,
  // x_j the mirror image. (A set-wise check would be vacuous for binary
  // models, where c* is always the complement of the prediction.)
  auto pair_ok = [&](const DenseArray& x, std::uint32_t own, std::uint32_t other) {
    DenseArray z = linear.logits(x);
    if (argmax_row({z.data(), z.size()}) != own) return false;
    return c_star(linear, x) == other;
  };
  res.in_scope = pair_ok(x_i, i, j) && pair_ok(x_j, j, i);

  // Two-class reduction: w, b are the j-minus-i column/bias differences.
  DenseArray w({n});
  for (std::size_t k = 0; k < n; ++k) w[k] = linear.W().at(k, j) - linear.W().at(k, i);
  double b = linear.b()[j] - linear.b()[i];
  double nw = norm2({w.data(), w.size()});
  if (nw < 1e-12) throw DegenerateModelError("verify_theorem1: identical columns");

  double f_i = dot({x_i.data(), n}, {w.data(), n}) + b;
  double f_j = dot({x_j.data(), n}, {w.data(), n}) + b;
  res.rho_i = -f_i / nw;
  res.rho_j = f_j / nw;

  DenseArray d({n});
  for (std::size_t k = 0; k < n; ++k) d[k] = x_j[k] - x_i[k];
  res.alpha = cosine_sim({d.data(), n}, {w.data(), n});
  double nd = norm2({d.data(), n});
  res.residual = std::abs(res.rho_i + res.rho_j - nd * res.alpha);
  return res;
}

Theorem1Sweep theorem1_sweep(std::size_t trials, std::size_t n, std::size_t C,
                             std::uint64_t seed) {
  Theorem1Sweep sweep;
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::child(seed, t);
    DenseArray W({n, C}), b({C});
    for (std::size_t k = 0; k < W.size(); ++k) W[k] = rng.next_gauss();
    for (std::size_t k = 0; k < C; ++k) b[k] = 0.1 * rng.next_gauss();
    LinearModel model(std::move(W), std::move(b));

    DenseArray x_i({n});
    for (std::size_t k = 0; k < n; ++k) x_i[k] = rng.next_gauss();
    DenseArray z = model.logits(x_i);
    std::uint32_t i = argmax_row({z.data(), z.size()});
    std::uint32_t j = c_star(model, x_i);

    bool measured = false;
    for (int attempt = 0; attempt < 200 && !measured; ++attempt) {
      DenseArray x_j({n});
      for (std::size_t k = 0; k < n; ++k) x_j[k] = rng.next_gauss();
      Theorem1Result r = verify_theorem1(model, x_i, x_j, i, j);
      if (!r.in_scope) {
        ++sweep.filtered;
        continue;
      }
      double rel = r.residual / (1.0 + std::abs(r.rho_i) + std::abs(r.rho_j));
      sweep.max_residual = std::max(sweep.max_residual, rel);
      sum += rel;
      ++sweep.trials;
      measured = true;
    }
  }
  if (sweep.trials > 0) sweep.mean_residual = sum / static_cast<double>(sweep.trials);
  return sweep;
}

double attack_robustness_l2(const Model& model, const DenseArray& x, std::uint32_t y,
                            double eta, int iterations, double radius_cap) {
  {
    DenseArray z = model.logits(x);
    if (argmax_row({z.data(), z.size()}) != y) return 0.0;  // ρ = 0 convention
  }
  double sqn = std::sqrt(static_cast<double>(x.size()));
  auto flips = [&](double eps) {
    AttackConfig cfg;
    cfg.norm = Norm::two;
    cfg.epsilon = eps;
    // Keep the ball edge reachable: k·η_eff·√n ≥ 2.5·ε.
    cfg.eta = std::max(eta, 2.5 * eps / (static_cast<double>(iterations) * sqn));
    cfg.iterations = iterations;
    cfg.random_start = false;
    DenseArray xadv = pgd_attack(model, x, {y}, cfg);
    DenseArray z = model.logits(xadv);
    return argmax_row({z.data(), z.size()}) != y;
  };

  double lo = 0.0, hi = radius_cap / 64.0;
  while (!flips(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > radius_cap)
      throw NoCrossingError("attack_robustness_l2: no flip below the radius cap");
  }
  for (int it = 0; it < 12; ++it) {
    double mid = 0.5 * (lo + hi);
    if (flips(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

SpheresEquality verify_spheres_equality(const Model& model, std::size_t sample_count,
                                        std::uint64_t seed) {
  Dataset ds = sample_spheres(sample_count, model.dim(), seed);
  SpheresEquality out;

  // Mean alignment straight from the per-sample metric: unlike the full
  // report this stays total on models whose gradients vanish everywhere,
  // which the degenerate flag below is meant to diagnose.
  double asum = 0.0;
  for (std::size_t i = 0; i < ds.count(); ++i) {
    DenseArray x({ds.n},
                 std::vector<double>(ds.x_of(i).begin(), ds.x_of(i).end()));
    asum += alpha_delta_x(model, x, ds.labels[i], ds.delta_of(i));
  }
  out.alpha_bar = asum / static_cast<double>(ds.count());

  std::vector<double> rhos(ds.count());
  parallel_for(ds.count(), [&](std::size_t i) {
    DenseArray x({ds.n},
                 std::vector<double>(ds.x_of(i).begin(), ds.x_of(i).end()));
    try {
      rhos[i] = attack_robustness_l2(model, x, ds.labels[i], 0.0005, 40, 1.0);
    } catch (const NoCrossingError&) {
      rhos[i] = 1.0;  // unflippable: report the cap as a lower bound
    }
  });
  std::nth_element(rhos.begin(), rhos.begin() + rhos.size() / 2, rhos.end());
  double med = rhos[rhos.size() / 2];
  if (rhos.size() % 2 == 0) {
    double lower = *std::max_element(rhos.begin(), rhos.begin() + rhos.size() / 2);
    med = 0.5 * (med + lower);
  }
  out.rho_m = med;
  out.degenerate = std::abs(out.alpha_bar) < 1e-12;
  out.ratio = out.degenerate ? 0.0 : out.rho_m / out.alpha_bar;
  return out;
}

std::vector<std::pair<double, double>> linearity_survey(const Model& model,
                                                        const Dataset& ds,
                                                        std::size_t sample_count) {
  std::size_t N = std::min(sample_count, ds.count());
  std::vector<std::optional<std::pair<double, double>>> slots(N);
  parallel_for(N, [&](std::size_t i) {
    DenseArray x({ds.n},
                 std::vector<double>(ds.x_of(i).begin(), ds.x_of(i).end()));
    double rho_hat = lemma1_robustness(model, x, ds.labels[i]);
    double cap = std::max(1.0, 0.5 * norm2(ds.x_of(i)));
    try {
      double rho_atk = attack_robustness_l2(model, x, ds.labels[i], 0.002, 40, cap);
      slots[i] = {rho_hat, rho_atk};
    } catch (const NoCrossingError&) {
      // point not flippable within the cap: excluded from the scatter
    }
  });
  std::vector<std::pair<double, double>> pairs;
  for (auto& s : slots)
    if (s) pairs.push_back(*s);
  return pairs;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("pearson: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double a = xs[i] - mx, b = ys[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gradalign
