#include "gradalign/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gradalign {

namespace {
// The formats are defined little-endian; this code assumes a little-endian
// host (asserted at compile time where the standard allows).
static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const char* what) {
  T v;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw FormatError(std::string("truncated file while reading ") + what);
  return v;
}

void put_f64s(std::ofstream& f, const double* p, std::size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
}

void get_f64s(std::ifstream& f, double* p, std::size_t n, const char* what) {
  if (!f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8)))
    throw FormatError(std::string("truncated file while reading ") + what);
}
}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write("GAM1", 4);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(model.layers().size()));
  for (const Layer& layer : model.layers()) {
    put<std::uint32_t>(f, static_cast<std::uint32_t>(layer.W.rows()));
    put<std::uint32_t>(f, static_cast<std::uint32_t>(layer.W.cols()));
    put_f64s(f, layer.W.data(), layer.W.size());
    put_f64s(f, layer.b.data(), layer.b.size());
  }
  put<std::uint32_t>(f, static_cast<std::uint32_t>(model.class_count()));
  if (!f) throw std::runtime_error("write failed for " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "GAM1", 4) != 0)
    throw FormatError("bad model magic in " + path);
  std::uint32_t layer_count = get<std::uint32_t>(f, "layer count");
  std::vector<Layer> layers;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    std::uint32_t rows = get<std::uint32_t>(f, "layer rows");
    std::uint32_t cols = get<std::uint32_t>(f, "layer cols");
    Layer layer{DenseArray({rows, cols}), DenseArray({std::size_t(rows)})};
    get_f64s(f, layer.W.data(), layer.W.size(), "weights");
    get_f64s(f, layer.b.data(), layer.b.size(), "biases");
    layers.push_back(std::move(layer));
  }
  std::uint32_t classes = get<std::uint32_t>(f, "class count");
  MlpModel model(std::move(layers));
  if (model.class_count() != classes)
    throw FormatError("class_count field disagrees with last layer in " + path);
  return model;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write("GDA1", 4);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.count()));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.n));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.class_count));
  put<std::uint8_t>(f, ds.has_delta() ? 1 : 0);
  std::vector<float> buf(ds.n);
  for (std::size_t i = 0; i < ds.count(); ++i) {
    put<std::uint32_t>(f, ds.labels[i]);
    for (std::size_t j = 0; j < ds.n; ++j)
      buf[j] = static_cast<float>(ds.X[i * ds.n + j]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(ds.n * 4));
    if (ds.has_delta()) {
      for (std::size_t j = 0; j < ds.n; ++j)
        buf[j] = static_cast<float>(ds.deltas[i * ds.n + j]);
      f.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(ds.n * 4));
    }
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "GDA1", 4) != 0)
    throw FormatError("bad dataset magic in " + path);
  std::uint32_t count = get<std::uint32_t>(f, "count");
  std::uint32_t n = get<std::uint32_t>(f, "n");
  std::uint32_t classes = get<std::uint32_t>(f, "class count");
  std::uint8_t has_delta = get<std::uint8_t>(f, "delta flag");
  Dataset ds;
  ds.name = path;
  ds.n = n;
  ds.class_count = classes;
  ds.labels.resize(count);
  ds.X.resize(std::size_t(count) * n);
  if (has_delta) ds.deltas.resize(std::size_t(count) * n);
  std::vector<float> buf(n);
  for (std::uint32_t i = 0; i < count; ++i) {
    ds.labels[i] = get<std::uint32_t>(f, "label");
    if (!f.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(std::size_t(n) * 4)))
      throw FormatError("truncated features in " + path);
    for (std::uint32_t j = 0; j < n; ++j) ds.X[std::size_t(i) * n + j] = buf[j];
    if (has_delta) {
      if (!f.read(reinterpret_cast<char*>(buf.data()),
                  static_cast<std::streamsize>(std::size_t(n) * 4)))
        throw FormatError("truncated deltas in " + path);
      for (std::uint32_t j = 0; j < n; ++j) ds.deltas[std::size_t(i) * n + j] = buf[j];
    }
  }
  return ds;
}

}  // namespace gradalign
