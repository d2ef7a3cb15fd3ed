#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradalign/data.hpp"
#include "gradalign/dense_array.hpp"
#include "gradalign/serialize.hpp"
#include "test_util.hpp"

using namespace gradalign;

namespace {

void put_u32_be(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

// A 4-image 2x3 IDX pair with hand-picked pixel bytes.
void write_idx_fixture(const std::filesystem::path& images,
                       const std::filesystem::path& labels,
                       std::uint32_t image_count = 4,
                       std::uint32_t label_count = 4,
                       bool truncate_images = false) {
  {
    std::ofstream f(images, std::ios::binary);
    put_u32_be(f, 0x00000803);
    put_u32_be(f, image_count);
    put_u32_be(f, 2);
    put_u32_be(f, 3);
    std::vector<unsigned char> px;
    for (std::uint32_t i = 0; i < image_count * 6; ++i)
      px.push_back(static_cast<unsigned char>((i * 37) % 256));
    px[0] = 0;
    px[1] = 128;
    px[2] = 255;
    std::size_t n = truncate_images ? px.size() - 5 : px.size();
    f.write(reinterpret_cast<const char*>(px.data()), static_cast<long>(n));
  }
  {
    std::ofstream f(labels, std::ios::binary);
    put_u32_be(f, 0x00000801);
    put_u32_be(f, label_count);
    const unsigned char lb[4] = {3, 5, 3, 9};
    f.write(reinterpret_cast<const char*>(lb), label_count);
  }
}

}  // namespace

TEST_SUITE("data-forge") {

TEST_CASE("spheres samples sit exactly on their radius with balanced classes") {
  const std::size_t count = 10000, dim = 20;
  Dataset ds = sample_spheres(count, dim, 42);
  REQUIRE(ds.count() == count);
  REQUIRE(ds.n == dim);
  REQUIRE(ds.class_count == 2);
  REQUIRE(ds.has_delta());

  std::size_t inner = 0;
  for (std::size_t i = 0; i < count; ++i) {
    double r = norm2(ds.x_of(i));
    double expected = ds.labels[i] == 0 ? 1.3 : 1.0;
    REQUIRE(r == doctest::Approx(expected).epsilon(1e-9));
    REQUIRE(norm2(ds.delta_of(i)) == doctest::Approx(0.3).epsilon(1e-9));
    // x + delta lands on the opposite sphere.
    std::vector<double> moved(ds.x_of(i).begin(), ds.x_of(i).end());
    axpy(1.0, ds.delta_of(i), moved);
    double other = ds.labels[i] == 0 ? 1.0 : 1.3;
    REQUIRE(norm2(moved) == doctest::Approx(other).epsilon(1e-9));
    inner += ds.labels[i];
  }
  double frac = static_cast<double>(inner) / static_cast<double>(count);
  CHECK(frac == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("spheres residual has the closed form on both spheres") {
  DenseArray inner = DenseArray::vec({1.0, 0.0, 0.0});
  DenseArray d_in = spheres_delta_x(inner);
  CHECK(d_in[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(d_in[1] == 0.0);
  CHECK(d_in[2] == 0.0);

  DenseArray outer = DenseArray::vec({0.0, -1.3, 0.0});
  DenseArray d_out = spheres_delta_x(outer);
  std::vector<double> moved{outer[0] + d_out[0], outer[1] + d_out[1],
                            outer[2] + d_out[2]};
  CHECK(norm2(moved) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(spheres_delta_x(DenseArray::vec({1.1, 0.0})),
                  std::invalid_argument);
}

TEST_CASE("sphere sample streams are indexed, so ranges reproduce slices") {
  Dataset full = sample_spheres(10, 6, 99);
  Dataset part = sample_spheres_range(3, 2, 6, 99);
  REQUIRE(part.count() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(part.labels[i] == full.labels[3 + i]);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(part.x_of(i)[j] == full.x_of(3 + i)[j]);
      CHECK(part.delta_of(i)[j] == full.delta_of(3 + i)[j]);
    }
  }
}

TEST_CASE("noiseless squares equal their class template with the frame residual") {
  SquaresConfig cfg;
  cfg.noise_std = 0.0;
  Dataset ds = gen_squares(8, cfg, 7);
  REQUIRE(ds.n == 32 * 32);
  REQUIRE(ds.has_delta());

  bool saw[2] = {false, false};
  for (std::size_t i = 0; i < ds.count(); ++i) {
    saw[ds.labels[i]] = true;
    DenseArray tpl = squares_template(cfg, ds.labels[i]);
    DenseArray other = squares_template(cfg, 1 - ds.labels[i]);
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < ds.n; ++j) {
      REQUIRE(ds.x_of(i)[j] == tpl[j]);
      double expect_delta = other[j] - tpl[j];
      REQUIRE(ds.delta_of(i)[j] == expect_delta);
      if (expect_delta != 0.0) {
        ++nonzero;
        // The residual lives on the frame between the two square sizes and
        // jumps the full background-to-foreground distance.
        REQUIRE(std::abs(expect_delta) == 2.0);
        REQUIRE(expect_delta == (ds.labels[i] == 0 ? 2.0 : -2.0));
      }
    }
    CHECK(nonzero == 231);  // 20^2 - 13^2
    CHECK(norm2(ds.delta_of(i)) ==
          doctest::Approx(30.397368307141328).epsilon(1e-12));
  }
  CHECK(saw[0]);
  CHECK(saw[1]);
}

TEST_CASE("square templates carry the right foreground mass") {
  SquaresConfig cfg;
  DenseArray small = squares_template(cfg, 0);
  DenseArray large = squares_template(cfg, 1);
  auto fg = [](const DenseArray& t) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] == 1.0) ++c;
    return c;
  };
  CHECK(fg(small) == 13 * 13);
  CHECK(fg(large) == 20 * 20);
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK((small[i] == 1.0 || small[i] == -1.0));
  }
}

TEST_CASE("noisy squares stay within the pixel range and are reproducible") {
  SquaresConfig cfg;  // default noise_std 0.1, blur_std 2.0
  Dataset a = gen_squares(6, cfg, 11);
  Dataset b = gen_squares(6, cfg, 11);
  CHECK(a.X == b.X);
  CHECK(a.labels == b.labels);

  for (std::size_t i = 0; i < a.count(); ++i) {
    for (std::size_t j = 0; j < a.n; ++j) {
      REQUIRE(a.x_of(i)[j] >= -1.0);
      REQUIRE(a.x_of(i)[j] <= 1.0);
    }
  }
  // Noise differentiates samples of the same class from the pure template.
  DenseArray tpl = squares_template(cfg, a.labels[0]);
  bool differs = false;
  for (std::size_t j = 0; j < a.n; ++j)
    if (a.x_of(0)[j] != tpl[j]) differs = true;
  CHECK(differs);
}

TEST_CASE("idx ingestion maps pixels linearly into [-1, 1]") {
  auto dir = test_dir("idx_ok");
  auto images = dir / "images.idx";
  auto labels = dir / "labels.idx";
  write_idx_fixture(images, labels);

  Dataset ds = load_mnist_idx(images.string(), labels.string());
  REQUIRE(ds.count() == 4);
  REQUIRE(ds.n == 6);
  CHECK(ds.labels == std::vector<std::uint32_t>{3, 5, 3, 9});
  CHECK(ds.x_of(0)[0] == -1.0);
  CHECK(ds.x_of(0)[1] == doctest::Approx(0.0039215686274509665).epsilon(1e-15));
  CHECK(ds.x_of(0)[2] == 1.0);
  CHECK(!ds.has_delta());
}

TEST_CASE("idx ingestion rejects malformed containers") {
  auto dir = test_dir("idx_bad");
  auto images = dir / "images.idx";
  auto labels = dir / "labels.idx";

  write_idx_fixture(images, labels);
  // Swapped arguments: a label magic where an image magic is required.
  CHECK_THROWS_AS(load_mnist_idx(labels.string(), images.string()),
                  BadMagicError);

  write_idx_fixture(images, labels, 4, 4, /*truncate_images=*/true);
  CHECK_THROWS_AS(load_mnist_idx(images.string(), labels.string()),
                  TruncatedError);

  write_idx_fixture(images, labels, 4, 3);
  CHECK_THROWS_AS(load_mnist_idx(images.string(), labels.string()),
                  CountMismatchError);
}

TEST_CASE("class filter keeps order and remaps labels ascending") {
  Dataset ds;
  ds.name = "toy";
  ds.n = 2;
  ds.class_count = 10;
  ds.labels = {3, 5, 7, 3};
  ds.X = {0, 1, 10, 11, 20, 21, 30, 31};

  Dataset kept = filter_classes(ds, {5, 3});  // order of `keep` is irrelevant
  REQUIRE(kept.count() == 3);
  CHECK(kept.class_count == 2);
  CHECK(kept.labels == std::vector<std::uint32_t>{0, 1, 0});
  CHECK(kept.x_of(0)[0] == 0.0);
  CHECK(kept.x_of(1)[0] == 10.0);
  CHECK(kept.x_of(2)[0] == 30.0);

  CHECK_THROWS_AS(filter_classes(ds, {9}), EmptyFilterError);
}

TEST_CASE("dataset container round-trips at f32 precision") {
  auto dir = test_dir("gda_roundtrip");
  Dataset ds = sample_spheres(10, 5, 21);
  std::string path = (dir / "spheres.gda").string();
  save_dataset(ds, path);
  Dataset back = load_dataset(path);

  REQUIRE(back.count() == ds.count());
  REQUIRE(back.n == ds.n);
  CHECK(back.class_count == ds.class_count);
  CHECK(back.labels == ds.labels);
  REQUIRE(back.has_delta());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    for (std::size_t j = 0; j < ds.n; ++j) {
      CHECK(back.x_of(i)[j] == doctest::Approx(ds.x_of(i)[j]).epsilon(1e-6));
      CHECK(back.delta_of(i)[j] ==
            doctest::Approx(ds.delta_of(i)[j]).epsilon(1e-6));
    }
  }
}

TEST_CASE("empty dataset serializes to a bare header") {
  auto dir = test_dir("gda_empty");
  Dataset ds;
  ds.n = 4;
  ds.class_count = 2;
  std::string path = (dir / "empty.gda").string();
  save_dataset(ds, path);
  CHECK(std::filesystem::file_size(path) == 17);
  Dataset back = load_dataset(path);
  CHECK(back.count() == 0);
  CHECK(back.n == 4);
}

TEST_CASE("dataset loader rejects a corrupt container") {
  auto dir = test_dir("gda_bad");
  std::string path = (dir / "bad.gda").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "GDAXthis is not a dataset";
  }
  CHECK_THROWS_AS(load_dataset(path), FormatError);

  // Header promising more samples than the payload carries.
  Dataset ds = sample_spheres(4, 3, 5);
  std::string good = (dir / "good.gda").string();
  save_dataset(ds, good);
  auto bytes = read_text_file(good);
  std::string clipped = (dir / "clipped.gda").string();
  {
    std::ofstream f(clipped, std::ios::binary);
    f.write(bytes.data(), static_cast<long>(bytes.size() - 7));
  }
  CHECK_THROWS_AS(load_dataset(clipped), FormatError);
}

}  // TEST_SUITE
