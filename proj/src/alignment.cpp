#include "gradalign/alignment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace gradalign {

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  double nu = norm2(u), nv = norm2(v);
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return dot(u, v) / (nu * nv + 1e-12);
}

namespace {

// One-hot difference coefficients e_a − e_b.
DenseArray diff_coeffs(std::size_t C, std::uint32_t a, std::uint32_t b) {
  DenseArray v({C});
  v[a] += 1.0;
  v[b] -= 1.0;
  return v;
}

// Shared candidate scan: per c ≠ y, |logit_y − logit_c| / ‖∇logit_y − ∇logit_c‖.
// Returns (best class, best score); classes with a ≥1e-12 denominator only.
std::pair<int, double> nearest_boundary(const Model& model, const DenseArray& x,
                                        std::uint32_t y) {
  std::size_t C = model.class_count();
  DenseArray z = model.logits(x);
  int best = -1;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < C; ++c) {
    if (c == y) continue;
    DenseArray g = model.input_gradient(x, diff_coeffs(C, y, c));
    double denom = norm2({g.data(), g.size()});
    if (denom < 1e-12) continue;
    double score = std::abs(z[y] - z[c]) / denom;
    if (score < best_score) {  // strict: ties keep the smaller index
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return {best, best_score};
}

}  // namespace

std::uint32_t tilde_c(const Model& model, const DenseArray& x, std::uint32_t y) {
  std::size_t C = model.class_count();
  if (C < 2) throw std::invalid_argument("tilde_c: need at least 2 classes");
  if (C == 2) return 1u - y;
  auto [best, score] = nearest_boundary(model, x, y);
  (void)score;
  if (best < 0)
    throw DegenerateModelError("tilde_c: zero gradient difference for all classes");
  return static_cast<std::uint32_t>(best);
}

DenseArray ell_gradient(const Model& model, const DenseArray& x, std::uint32_t y) {
  std::uint32_t c = tilde_c(model, x, y);
  return model.input_gradient(x, diff_coeffs(model.class_count(), c, y));
}

double alpha_delta_x(const Model& model, const DenseArray& x, std::uint32_t y,
                     std::span<const double> delta_x) {
  DenseArray g = ell_gradient(model, x, y);
  return cosine_sim(delta_x, {g.data(), g.size()});
}

double alpha_x_baseline(const Model& model, const DenseArray& x) {
  double nx = norm2({x.data(), x.size()});
  if (nx < 1e-12)
    throw std::invalid_argument("alpha_x_baseline: zero input vector");
  DenseArray z = model.logits(x);
  std::uint32_t m = argmax_row({z.data(), z.size()});
  DenseArray onehot({model.class_count()});
  onehot[m] = 1.0;
  DenseArray g = model.input_gradient(x, onehot);
  double ng = norm2({g.data(), g.size()});
  if (ng < 1e-12) return 0.0;
  return std::abs(dot({x.data(), x.size()}, {g.data(), g.size()})) /
         (nx * ng + 1e-12);
}

double lemma1_robustness(const Model& model, const DenseArray& x, std::uint32_t y) {
  auto [best, score] = nearest_boundary(model, x, y);
  if (best < 0)
    throw DegenerateModelError(
        "lemma1_robustness: zero gradient difference for all classes");
  DenseArray z = model.logits(x);
  bool correct = argmax_row({z.data(), z.size()}) == y;
  return correct ? score : -score;
}

AlignmentReport evaluate_alignment(const Model& model, const Dataset& ds) {
  if (!ds.has_delta())
    throw std::invalid_argument("evaluate_alignment: dataset lacks Δx");
  AlignmentReport report;
  report.records.reserve(ds.count());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    DenseArray x({ds.n}, {ds.x_of(i).data(), ds.x_of(i).data() + ds.n});
    std::uint32_t y = ds.labels[i];
    DenseArray z = model.logits(x);
    AlignmentRecord rec;
    rec.index = i;
    rec.y = y;
    rec.m_x = argmax_row({z.data(), z.size()});
    rec.tilde_c = tilde_c(model, x, y);
    rec.alpha_dx = alpha_delta_x(model, x, y, ds.delta_of(i));
    rec.alpha_x = alpha_x_baseline(model, x);
    rec.rho_lemma1 = lemma1_robustness(model, x, y);
    report.records.push_back(rec);
  }
  auto mean_std = [&](auto proj) -> std::pair<double, double> {
    double mean = 0.0;
    for (const auto& r : report.records) mean += proj(r);
    mean /= static_cast<double>(report.records.size());
    if (report.records.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (const auto& r : report.records) {
      double d = proj(r) - mean;
      ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(report.records.size() - 1))};
  };
  std::tie(report.alpha_dx_mean, report.alpha_dx_std) =
      mean_std([](const AlignmentRecord& r) { return r.alpha_dx; });
  std::tie(report.alpha_x_mean, report.alpha_x_std) =
      mean_std([](const AlignmentRecord& r) { return r.alpha_x; });
  return report;
}

void write_alignment_csv(const AlignmentReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "index,y,m_x,tilde_c,alpha_dx,alpha_x,rho_lemma1\n";
  char buf[160];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%zu,%u,%u,%u,%.9g,%.9g,%.9g\n", r.index, r.y,
                  r.m_x, r.tilde_c, r.alpha_dx, r.alpha_x, r.rho_lemma1);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace gradalign
