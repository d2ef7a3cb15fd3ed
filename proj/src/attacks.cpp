#include "gradalign/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gradalign {

namespace {

void project_row(double* delta, std::size_t n, Norm norm, double eps) {
  if (norm == Norm::inf) {
    for (std::size_t j = 0; j < n; ++j) delta[j] = std::clamp(delta[j], -eps, eps);
  } else {
    double nrm = norm2({delta, n});
    if (nrm > eps && nrm > 0.0) scale(eps / nrm, {delta, n});
  }
}

}  // namespace

DenseArray pgd_attack(const Model& model, const DenseArray& X,
                      const std::vector<std::uint32_t>& y, const AttackConfig& cfg) {
  DenseArray Xb = X.rank() == 1
                      ? DenseArray({1, X.size()}, {X.data(), X.data() + X.size()})
                      : X;
  std::size_t B = Xb.rows(), n = Xb.cols();
  if (y.size() != B) throw std::invalid_argument("pgd_attack: labels/batch mismatch");
  double eff_eta = cfg.norm == Norm::two
                       ? cfg.eta * std::sqrt(static_cast<double>(n))
                       : cfg.eta;

  DenseArray delta({B, n});
  if (cfg.random_start && cfg.epsilon > 0.0) {
    for (std::size_t b = 0; b < B; ++b) {
      Rng rng = Rng::child(cfg.seed, b);
      double* d = delta.data() + b * n;
      if (cfg.norm == Norm::inf) {
        for (std::size_t j = 0; j < n; ++j)
          d[j] = rng.uniform(-cfg.epsilon, cfg.epsilon);
      } else {
        // Uniform in the L2 ball: Gaussian direction, radius ε·u^{1/n}.
        for (std::size_t j = 0; j < n; ++j) d[j] = rng.next_gauss();
        double nrm = norm2({d, n});
        if (nrm > 0.0) {
          double r = cfg.epsilon *
                     std::pow(rng.next_unit(), 1.0 / static_cast<double>(n));
          scale(r / nrm, {d, n});
        }
      }
    }
  }

  DenseArray Xadv({B, n});
  auto apply_delta = [&] {
    for (std::size_t i = 0; i < Xadv.size(); ++i) Xadv[i] = Xb[i] + delta[i];
    if (cfg.clamp_range) {
      auto [lo, hi] = *cfg.clamp_range;
      for (std::size_t i = 0; i < Xadv.size(); ++i)
        Xadv[i] = std::clamp(Xadv[i], lo, hi);
      for (std::size_t i = 0; i < Xadv.size(); ++i) delta[i] = Xadv[i] - Xb[i];
    }
  };
  for (std::size_t b = 0; b < B; ++b)
    project_row(delta.data() + b * n, n, cfg.norm, cfg.epsilon);
  apply_delta();

  for (int it = 0; it < cfg.iterations && cfg.epsilon > 0.0; ++it) {
    DenseArray Z = model.logits(Xadv);
    DenseArray coeffs = ce_logit_coeffs(Z, y);  // ascent direction of CE
    DenseArray G = model.input_gradient(Xadv, coeffs);
    for (std::size_t b = 0; b < B; ++b) {
      double* d = delta.data() + b * n;
      const double* g = G.data() + b * n;
      if (cfg.norm == Norm::inf) {
        for (std::size_t j = 0; j < n; ++j)
          d[j] += eff_eta * (g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0));
      } else {
        double nrm = norm2({g, n});
        if (nrm > 1e-12) axpy(eff_eta / nrm, {g, n}, {d, n});
      }
      project_row(d, n, cfg.norm, cfg.epsilon);
    }
    apply_delta();
  }
  return X.rank() == 1 ? DenseArray({n}, {Xadv.data(), Xadv.data() + n})
                       : Xadv;
}

namespace {

double margin_of_row(std::span<const double> logits, std::uint32_t y) {
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (c != y) best_other = std::max(best_other, logits[c]);
  return logits[y] - best_other;
}

}  // namespace

std::vector<int> square_milestones(int queries) {
  static constexpr int base[] = {10, 50, 200, 500, 1000, 2000, 4000, 6000, 8000};
  std::vector<int> out;
  for (int m : base)
    out.push_back(std::max(1, static_cast<int>(std::lround(
                                  m * static_cast<double>(queries) / 10000.0))));
  return out;
}

double square_p_at(int query, int queries, double p_init) {
  std::vector<int> milestones = square_milestones(queries);
  int halvings = static_cast<int>(std::count_if(
      milestones.begin(), milestones.end(), [&](int m) { return m <= query; }));
  return p_init / std::pow(2.0, halvings);
}

std::size_t square_side(double p, std::size_t h, std::size_t w) {
  return static_cast<std::size_t>(
      std::clamp<long>(std::lround(std::sqrt(p * static_cast<double>(h * w))), 1,
                       static_cast<long>(std::min(h, w))));
}

DenseArray square_attack(const Model& model, const DenseArray& X,
                         const std::vector<std::uint32_t>& y,
                         const SquareAttackConfig& cfg) {
  DenseArray Xb = X.rank() == 1
                      ? DenseArray({1, X.size()}, {X.data(), X.data() + X.size()})
                      : X;
  std::size_t B = Xb.rows(), n = Xb.cols();
  std::size_t h = cfg.img_h, w = cfg.img_w;
  if (h * w != n)
    throw std::invalid_argument("square_attack: image view does not match dim");
  if (y.size() != B)
    throw std::invalid_argument("square_attack: labels/batch mismatch");

  auto clamp_px = [&](double v) {
    if (!cfg.clamp_range) return v;
    return std::clamp(v, cfg.clamp_range->first, cfg.clamp_range->second);
  };

  DenseArray cur = Xb;
  std::vector<double> margin(B);
  std::vector<char> done(B, 0);
  std::vector<Rng> rngs;
  rngs.reserve(B);
  for (std::size_t b = 0; b < B; ++b) rngs.push_back(Rng::child(cfg.seed, b));

  {  // margins of the clean points; already-misclassified samples are done
    DenseArray Z = model.logits(Xb);
    for (std::size_t b = 0; b < B; ++b) {
      margin[b] = margin_of_row(Z.row(b), y[b]);
      if (margin[b] < 0.0) done[b] = 1;
    }
  }

  if (cfg.epsilon > 0.0) {
    // Vertical stripe init: one ±ε sign per column, full height.
    DenseArray cand = Xb;
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      double* p = cand.data() + b * n;
      for (std::size_t c = 0; c < w; ++c) {
        double s = rngs[b].next_unit() < 0.5 ? -cfg.epsilon : cfg.epsilon;
        for (std::size_t r = 0; r < h; ++r)
          p[r * w + c] = clamp_px(p[r * w + c] + s);
      }
    }
    DenseArray Z = model.logits(cand);
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      double m = margin_of_row(Z.row(b), y[b]);
      if (m < margin[b]) {
        margin[b] = m;
        std::copy_n(cand.data() + b * n, n, cur.data() + b * n);
      }
      if (margin[b] < 0.0) done[b] = 1;
    }
  }

  DenseArray cand = cur;
  for (int q = 1; q <= cfg.queries && cfg.epsilon > 0.0; ++q) {
    double p = square_p_at(q, cfg.queries, cfg.p_init);
    std::size_t side = square_side(p, h, w);
    bool any = false;
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      any = true;
      std::size_t r0 = rngs[b].next_below(h - side + 1);
      std::size_t c0 = rngs[b].next_below(w - side + 1);
      double s = rngs[b].next_unit() < 0.5 ? -cfg.epsilon : cfg.epsilon;
      double* pc = cand.data() + b * n;
      const double* pcur = cur.data() + b * n;
      std::copy_n(pcur, n, pc);
      const double* orig = Xb.data() + b * n;
      for (std::size_t r = r0; r < r0 + side; ++r)
        for (std::size_t c = c0; c < c0 + side; ++c)
          pc[r * w + c] = clamp_px(orig[r * w + c] + s);
    }
    if (!any) break;
    DenseArray Z = model.logits(cand);
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      double m = margin_of_row(Z.row(b), y[b]);
      if (m < margin[b]) {  // strict decrease only
        margin[b] = m;
        std::copy_n(cand.data() + b * n, n, cur.data() + b * n);
      }
      if (margin[b] < 0.0) done[b] = 1;
    }
  }
  return X.rank() == 1 ? DenseArray({n}, {cur.data(), cur.data() + n}) : cur;
}

std::string attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::pgd_inf: return "pgd-linf";
    case AttackKind::pgd_l2: return "pgd-l2";
    case AttackKind::square: return "square-linf";
  }
  return "?";
}

RobustnessCurve robustness_curve(const Model& model, const Dataset& ds,
                                 AttackKind kind, const std::vector<double>& grid,
                                 const CurveConfig& cfg) {
  if (grid.empty() || grid.front() != 0.0)
    throw std::invalid_argument("robustness_curve: grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw std::invalid_argument("robustness_curve: grid must be ascending");

  std::size_t N = ds.count();
  std::vector<char> broken(N, 0);
  {
    DenseArray X = ds.batch_x(0, N);
    std::vector<std::uint32_t> pred = predict(model, X);
    for (std::size_t i = 0; i < N; ++i) broken[i] = pred[i] != ds.labels[i];
  }

  RobustnessCurve curve;
  curve.attack = attack_kind_name(kind);
  for (double eps : grid) {
    if (eps > 0.0) {
      std::vector<std::size_t> alive;
      for (std::size_t i = 0; i < N; ++i)
        if (!broken[i]) alive.push_back(i);
      if (!alive.empty()) {
        DenseArray X({alive.size(), ds.n});
        std::vector<std::uint32_t> y(alive.size());
        for (std::size_t k = 0; k < alive.size(); ++k) {
          std::copy_n(ds.X.data() + alive[k] * ds.n, ds.n, X.data() + k * ds.n);
          y[k] = ds.labels[alive[k]];
        }
        DenseArray Xadv;
        if (kind == AttackKind::square) {
          SquareAttackConfig sq;
          sq.epsilon = eps;
          sq.queries = cfg.square_queries;
          sq.p_init = cfg.p_init;
          sq.img_h = cfg.img_h;
          sq.img_w = cfg.img_w;
          sq.clamp_range = cfg.clamp_range;
          sq.seed = cfg.seed;
          Xadv = square_attack(model, X, y, sq);
        } else {
          AttackConfig pc;
          pc.norm = kind == AttackKind::pgd_inf ? Norm::inf : Norm::two;
          pc.epsilon = eps;
          // Keep the ball edge reachable over wide grids: the walk covers
          // k·η (L∞) or k·η·√n (L2), so raise the step to 2.5·ε of reach
          // when the configured η would fall short.
          double reach = 2.5 * eps / static_cast<double>(cfg.iterations);
          if (pc.norm == Norm::two) reach /= std::sqrt(static_cast<double>(ds.n));
          pc.eta = std::max(cfg.eta, reach);
          pc.iterations = cfg.iterations;
          pc.random_start = cfg.random_start;
          pc.clamp_range = cfg.clamp_range;
          pc.seed = cfg.seed;
          Xadv = pgd_attack(model, X, y, pc);
        }
        std::vector<std::uint32_t> pred = predict(model, Xadv);
        for (std::size_t k = 0; k < alive.size(); ++k)
          if (pred[k] != y[k]) broken[alive[k]] = 1;
      }
    }
    std::size_t ok = 0;
    for (char b : broken) ok += b == 0;
    curve.points.emplace_back(eps, static_cast<double>(ok) / static_cast<double>(N));
  }
  return curve;
}

double epsilon_50(const RobustnessCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2)
    throw std::invalid_argument("epsilon_50: need at least 2 curve points");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].second <= 0.5) {
      if (i == 0) return pts[0].first;
      auto [e0, a0] = pts[i - 1];
      auto [e1, a1] = pts[i];
      return e0 + (a0 - 0.5) * (e1 - e0) / (a0 - a1);
    }
  }
  throw NoCrossingError("no crossing: accuracy never reached 0.5; extend the grid");
}

std::vector<double> log_grid_with_zero(double lo, double hi, std::size_t points) {
  if (lo <= 0.0 || hi <= lo || points < 2)
    throw std::invalid_argument("log_grid_with_zero: need 0 < lo < hi, points >= 2");
  std::vector<double> grid{0.0};
  double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    grid.push_back(lo * std::exp(step * static_cast<double>(i)));
  return grid;
}

}  // namespace gradalign
