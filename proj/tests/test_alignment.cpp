#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradalign/alignment.hpp"
#include "gradalign/data.hpp"
#include "gradalign/model.hpp"
#include "gradalign/rng.hpp"
#include "test_util.hpp"

using namespace gradalign;

namespace {

MlpModel constant_mlp(std::size_t in, std::size_t classes) {
  std::vector<Layer> layers;
  layers.push_back({DenseArray({4, in}), DenseArray({4})});
  layers.push_back({DenseArray({classes, 4}), DenseArray({classes})});
  return MlpModel(std::move(layers));
}

}  // namespace

TEST_SUITE("alignment") {

TEST_CASE("cosine similarity handles parallel, oblique and empty directions") {
  std::vector<double> e1{1, 0}, diag{1, 1}, e2{0, 1}, zero{0, 0};
  // The 1e-12 division guard nudges the pure 1/sqrt(2) at the 13th decimal.
  CHECK(cosine_sim(e1, diag) ==
        doctest::Approx(0.7071067811865476).epsilon(1e-11));
  CHECK(cosine_sim(e1, e2) == 0.0);
  CHECK(cosine_sim(e1, e1) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> neg{-2, 0};
  CHECK(cosine_sim(e1, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cosine_sim(e1, zero) == 0.0);
}

TEST_CASE("binary models always pick the opposite class as nearest") {
  RadialSpheresModel m(4);
  DenseArray x = DenseArray::vec({1.0, 0, 0, 0});
  CHECK(tilde_c(m, x, 0) == 1);
  CHECK(tilde_c(m, x, 1) == 0);
}

TEST_CASE("nearest other class minimizes the linearized boundary distance") {
  // Class gradients w0 = (1,0), w1 = (0,1), w2 = (-1,1); biases (0, .1, -.3).
  LinearModel m(DenseArray::mat(2, 3, {1, 0, -1, 0, 1, 1}),
                DenseArray::vec({0, 0.1, -0.3}));
  DenseArray x = DenseArray::vec({0.4, -0.2});

  DenseArray z = m.logits(x);
  CHECK(z[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(z[2] == doctest::Approx(-0.9).epsilon(1e-15));

  // Candidate distances: 0.5/sqrt(2) vs 1.3/sqrt(5); class 1 wins.
  CHECK(tilde_c(m, x, 0) == 1);
  CHECK(lemma1_robustness(m, x, 0) ==
        doctest::Approx(0.35355339059327373).epsilon(1e-14));
}

TEST_CASE("exact distance ties resolve to the smaller class index") {
  // Classes 1 and 2 sit symmetrically around x: equal logits, equal
  // gradient-difference norms.
  LinearModel m(DenseArray::mat(2, 3, {1, 0, 2, 0, 1, -1}),
                DenseArray::vec({0, 0, 0}));
  DenseArray x = DenseArray::vec({1.0, 1.0});
  DenseArray z = m.logits(x);
  CHECK(z[1] == z[2]);
  CHECK(tilde_c(m, x, 0) == 1);
}

TEST_CASE("degenerate models with no usable boundary throw") {
  MlpModel dead3 = constant_mlp(2, 3);
  DenseArray x = DenseArray::vec({0.3, 0.4});
  CHECK_THROWS_AS(tilde_c(dead3, x, 0), DegenerateModelError);
  MlpModel dead2 = constant_mlp(2, 2);
  CHECK_THROWS_AS(lemma1_robustness(dead2, x, 0), DegenerateModelError);
}

TEST_CASE("loss gradient is the gradient of the nearest-vs-own logit gap") {
  RadialSpheresModel radial(3);
  DenseArray inner = DenseArray::vec({0, 0.6, 0.8});
  DenseArray g = ell_gradient(radial, inner, 1);
  // d/dx (logit_0 - logit_1) = 2 x / ||x||.
  CHECK(g[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(g[2] == doctest::Approx(1.6).epsilon(1e-12));

  LinearModel lin(DenseArray::mat(2, 2, {3, 0, 4, 0}), DenseArray::vec({0, 0}));
  DenseArray gl = ell_gradient(lin, DenseArray::vec({0.5, 0.5}), 0);
  CHECK(gl[0] == -3.0);  // w_1 - w_0
  CHECK(gl[1] == -4.0);

  // For an MLP the same quantity must agree with the raw input gradient.
  Rng rng(6);
  MlpModel mlp = MlpModel::make(2, {6}, 2, rng);
  DenseArray xp = DenseArray::vec({0.45, -0.3});
  DenseArray ge = ell_gradient(mlp, xp, 0);
  DenseArray gi = mlp.input_gradient(xp, DenseArray::vec({-1, 1}));
  CHECK(ge == gi);
  CHECK(finite_diff_check(mlp, xp, DenseArray::vec({-1, 1}), 1e-5) < 1e-4);
}

TEST_CASE("alignment with the true residual is perfect for the radial model") {
  RadialSpheresModel m(5);
  Dataset ds = sample_spheres(30, 5, 13);
  for (std::size_t i = 0; i < ds.count(); ++i) {
    DenseArray x({5}, std::vector<double>(ds.x_of(i).begin(), ds.x_of(i).end()));
    double a = alpha_delta_x(m, x, ds.labels[i], ds.delta_of(i));
    CHECK(a == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("orthogonal residuals score zero alignment") {
  LinearModel m(DenseArray::mat(2, 2, {1, 0, 0, 0}), DenseArray::vec({0, 0}));
  DenseArray x = DenseArray::vec({0.7, 0.1});
  std::vector<double> ortho{0.0, 1.0};  // ell gradient is (-1, 0)
  CHECK(alpha_delta_x(m, x, 0, ortho) == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> anti{1.0, 0.0};
  CHECK(alpha_delta_x(m, x, 0, anti) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("baseline input alignment is unsigned and peaks on radial geometry") {
  RadialSpheresModel m(4);
  DenseArray outer = DenseArray::vec({1.3, 0, 0, 0});
  CHECK(alpha_x_baseline(m, outer) == doctest::Approx(1.0).epsilon(1e-9));
  // Inner points have gradient -x/||x||: the absolute value keeps it at 1.
  DenseArray inner = DenseArray::vec({0, -1.0, 0, 0});
  CHECK(alpha_x_baseline(m, inner) == doctest::Approx(1.0).epsilon(1e-9));

  LinearModel lin(DenseArray::mat(2, 2, {1, 0, 1, 0}), DenseArray::vec({0, 0}));
  CHECK(alpha_x_baseline(lin, DenseArray::vec({1.0, 0.0})) ==
        doctest::Approx(0.7071067811865475).epsilon(1e-12));

  CHECK_THROWS_AS(alpha_x_baseline(m, DenseArray::vec({0, 0, 0, 0})),
                  std::invalid_argument);
}

TEST_CASE("linearized robustness is signed by correctness") {
  LinearModel m(DenseArray::mat(2, 2, {3, 0, 4, 0}), DenseArray::vec({0, 0}));
  DenseArray x = DenseArray::vec({1.0, 1.0});
  CHECK(lemma1_robustness(m, x, 0) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(lemma1_robustness(m, x, 1) == doctest::Approx(-1.4).epsilon(1e-14));

  RadialSpheresModel radial(6);
  DenseArray on_inner = DenseArray::vec({1.0, 0, 0, 0, 0, 0});
  CHECK(lemma1_robustness(radial, on_inner, 1) ==
        doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("every alignment quantity is invariant to logit rescaling") {
  Rng rng(6);
  MlpModel m = MlpModel::make(3, {8}, 3, rng);
  MlpModel scaled = m;
  for (std::size_t i = 0; i < scaled.layers().back().W.size(); ++i)
    scaled.layers().back().W[i] *= 3.0;
  for (std::size_t i = 0; i < scaled.layers().back().b.size(); ++i)
    scaled.layers().back().b[i] *= 3.0;

  DenseArray x = DenseArray::vec({0.4, -0.1, 0.25});
  std::vector<double> dx{0.2, 0.1, -0.3};
  for (std::uint32_t y = 0; y < 3; ++y) {
    CHECK(tilde_c(m, x, y) == tilde_c(scaled, x, y));
    CHECK(lemma1_robustness(m, x, y) ==
          doctest::Approx(lemma1_robustness(scaled, x, y)).epsilon(1e-12));
    CHECK(alpha_delta_x(m, x, y, dx) ==
          doctest::Approx(alpha_delta_x(scaled, x, y, dx)).epsilon(1e-12));
  }
  CHECK(alpha_x_baseline(m, x) ==
        doctest::Approx(alpha_x_baseline(scaled, x)).epsilon(1e-12));
}

TEST_CASE("dataset-level evaluation aggregates and serializes the records") {
  RadialSpheresModel m(6);
  Dataset ds = sample_spheres(20, 6, 31);
  AlignmentReport rep = evaluate_alignment(m, ds);
  REQUIRE(rep.records.size() == 20);
  CHECK(rep.alpha_dx_mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.alpha_dx_std == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(rep.alpha_x_mean == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& r : rep.records) {
    CHECK(r.m_x == r.y);  // the analytic model never errs on-sphere
    CHECK(r.rho_lemma1 == doctest::Approx(0.15).epsilon(1e-9));
  }

  auto dir = test_dir("alignment_csv");
  std::string path = (dir / "alignment.csv").string();
  write_alignment_csv(rep, path);
  std::istringstream in(read_text_file(path));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "index,y,m_x,tilde_c,alpha_dx,alpha_x,rho_lemma1");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 20);

  Dataset no_delta = ds;
  no_delta.deltas.clear();
  CHECK_THROWS_AS(evaluate_alignment(m, no_delta), std::invalid_argument);
}

}  // TEST_SUITE
