#include "gradalign/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gradalign {

DenseArray Dataset::batch_x(std::size_t begin, std::size_t len) const {
  DenseArray B({len, n});
  std::memcpy(B.data(), X.data() + begin * n, len * n * sizeof(double));
  return B;
}

Dataset Dataset::slice(std::size_t begin, std::size_t len) const {
  Dataset out;
  out.name = name;
  out.n = n;
  out.class_count = class_count;
  out.labels.assign(labels.begin() + begin, labels.begin() + begin + len);
  out.X.assign(X.begin() + begin * n, X.begin() + (begin + len) * n);
  if (has_delta())
    out.deltas.assign(deltas.begin() + begin * n, deltas.begin() + (begin + len) * n);
  return out;
}

Dataset sample_spheres_range(std::size_t first, std::size_t count, std::size_t dim,
                             std::uint64_t seed) {
  if (dim < 2 || count < 1)
    throw std::invalid_argument("sample_spheres: need dim >= 2 and count >= 1");
  Dataset ds;
  ds.name = "spheres";
  ds.n = dim;
  ds.class_count = 2;
  ds.labels.resize(count);
  ds.X.resize(count * dim);
  ds.deltas.resize(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::child(seed, first + i);
    bool inner = rng.next_unit() < 0.5;  // class −1 ↦ label 1 (radius 1.0)
    double radius = inner ? 1.0 : 1.3;
    double* x = ds.X.data() + i * dim;
    double nrm = 0.0;
    do {
      for (std::size_t j = 0; j < dim; ++j) x[j] = rng.next_gauss();
      nrm = norm2({x, dim});
    } while (nrm < 1e-12);
    for (std::size_t j = 0; j < dim; ++j) x[j] *= radius / nrm;
    ds.labels[i] = inner ? 1u : 0u;
    double k = inner ? 0.3 : -0.3 / 1.3;
    double* d = ds.deltas.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) d[j] = k * x[j];
  }
  return ds;
}

Dataset sample_spheres(std::size_t count, std::size_t dim, std::uint64_t seed) {
  return sample_spheres_range(0, count, dim, seed);
}

DenseArray spheres_delta_x(const DenseArray& x) {
  double nrm = norm2({x.data(), x.size()});
  double k;
  if (std::abs(nrm - 1.0) < 1e-9)
    k = 0.3;
  else if (std::abs(nrm - 1.3) < 1e-9)
    k = -0.3 / 1.3;
  else
    throw std::invalid_argument("spheres_delta_x: point lies on neither sphere");
  DenseArray d = x;
  scale(k, {d.data(), d.size()});
  return d;
}

DenseArray squares_template(const SquaresConfig& cfg, std::uint32_t label) {
  std::size_t S = cfg.image_side;
  std::size_t side = label == 0 ? cfg.side_class_pos : cfg.side_class_neg;
  if (side == 0 || side >= S)
    throw std::invalid_argument("squares_template: square side out of range");
  DenseArray img({S, S});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = cfg.background;
  std::size_t off = (S - side) / 2;
  for (std::size_t r = off; r < off + side; ++r)
    for (std::size_t c = off; c < off + side; ++c) img.at(r, c) = cfg.foreground;
  return img;
}

namespace {
std::vector<double> blur_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution with zero padding outside the image.
void blur_inplace(std::vector<double>& img, std::size_t S, double sigma) {
  std::vector<double> kern = blur_kernel(sigma);
  int radius = (static_cast<int>(kern.size()) - 1) / 2;
  std::vector<double> tmp(S * S, 0.0);
  for (std::size_t r = 0; r < S; ++r)
    for (std::size_t c = 0; c < S; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        int cc = static_cast<int>(c) + k;
        if (cc >= 0 && cc < static_cast<int>(S))
          acc += kern[k + radius] * img[r * S + cc];
      }
      tmp[r * S + c] = acc;
    }
  for (std::size_t r = 0; r < S; ++r)
    for (std::size_t c = 0; c < S; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        int rr = static_cast<int>(r) + k;
        if (rr >= 0 && rr < static_cast<int>(S))
          acc += kern[k + radius] * tmp[rr * S + c];
      }
      img[r * S + c] = acc;
    }
}
}  // namespace

Dataset gen_squares(std::size_t count, const SquaresConfig& cfg, std::uint64_t seed) {
  std::size_t S = cfg.image_side;
  std::size_t n = S * S;
  DenseArray tmpl0 = squares_template(cfg, 0);
  DenseArray tmpl1 = squares_template(cfg, 1);
  Dataset ds;
  ds.name = "squares" + std::to_string(S);
  ds.n = n;
  ds.class_count = 2;
  ds.labels.resize(count);
  ds.X.resize(count * n);
  ds.deltas.resize(count * n);
  std::vector<double> noise(n);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::child(seed, i);
    bool neg = rng.next_unit() < 0.5;  // class −1 ↦ label 1 (larger square)
    std::uint32_t label = neg ? 1u : 0u;
    const DenseArray& own = neg ? tmpl1 : tmpl0;
    const DenseArray& other = neg ? tmpl0 : tmpl1;
    double* x = ds.X.data() + i * n;
    double* d = ds.deltas.data() + i * n;
    if (cfg.noise_std > 0.0) {
      for (std::size_t j = 0; j < n; ++j) noise[j] = cfg.noise_std * rng.next_gauss();
      blur_inplace(noise, S, cfg.blur_std);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = std::clamp(own[j] + noise[j], -1.0, 1.0);
    } else {
      std::memcpy(x, own.data(), n * sizeof(double));
    }
    for (std::size_t j = 0; j < n; ++j) d[j] = other[j] - own[j];
    ds.labels[i] = label;
  }
  return ds;
}

namespace {
std::uint32_t read_be_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw TruncatedError("truncated IDX header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}
}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw std::runtime_error("cannot open " + images_path);
  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw std::runtime_error("cannot open " + labels_path);

  std::uint32_t magic_i = read_be_u32(fi, images_path);
  if (magic_i != 0x00000803u)
    throw BadMagicError("bad magic in " + images_path + " (want 0x00000803)");
  std::uint32_t count = read_be_u32(fi, images_path);
  std::uint32_t rows = read_be_u32(fi, images_path);
  std::uint32_t cols = read_be_u32(fi, images_path);

  std::uint32_t magic_l = read_be_u32(fl, labels_path);
  if (magic_l != 0x00000801u)
    throw BadMagicError("bad magic in " + labels_path + " (want 0x00000801)");
  std::uint32_t count_l = read_be_u32(fl, labels_path);
  if (count != count_l)
    throw CountMismatchError("image/label counts differ: " + std::to_string(count) +
                             " vs " + std::to_string(count_l));

  std::size_t n = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(count) * n);
  if (!fi.read(reinterpret_cast<char*>(pixels.data()),
               static_cast<std::streamsize>(pixels.size())))
    throw TruncatedError("truncated pixel payload in " + images_path);
  std::vector<unsigned char> raw_labels(count);
  if (!fl.read(reinterpret_cast<char*>(raw_labels.data()), count))
    throw TruncatedError("truncated label payload in " + labels_path);

  Dataset ds;
  ds.name = "mnist";
  ds.n = n;
  ds.class_count = 10;
  ds.labels.assign(raw_labels.begin(), raw_labels.end());
  ds.X.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    ds.X[i] = static_cast<double>(pixels[i]) / 127.5 - 1.0;
  return ds;
}

Dataset filter_classes(const Dataset& ds, const std::vector<std::uint32_t>& keep) {
  std::vector<std::uint32_t> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  auto remap = [&](std::uint32_t y) -> int {
    auto it = std::find(sorted.begin(), sorted.end(), y);
    return it == sorted.end() ? -1 : static_cast<int>(it - sorted.begin());
  };
  Dataset out;
  out.name = ds.name + "-filtered";
  out.n = ds.n;
  out.class_count = sorted.size();
  for (std::size_t i = 0; i < ds.count(); ++i) {
    int y = remap(ds.labels[i]);
    if (y < 0) continue;
    out.labels.push_back(static_cast<std::uint32_t>(y));
    out.X.insert(out.X.end(), ds.X.begin() + i * ds.n, ds.X.begin() + (i + 1) * ds.n);
    if (ds.has_delta())
      out.deltas.insert(out.deltas.end(), ds.deltas.begin() + i * ds.n,
                        ds.deltas.begin() + (i + 1) * ds.n);
  }
  if (out.labels.empty()) throw EmptyFilterError("filter_classes: no samples kept");
  return out;
}

}  // namespace gradalign
