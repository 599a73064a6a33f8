#include "artgan/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "artgan/data/image_io.hpp"
#include "artgan/errors.hpp"

namespace artgan::data {

namespace fs = std::filesystem;

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (splits[i] == split) out.push_back(i);
  return out;
}

std::vector<std::vector<std::size_t>> Dataset::by_class(Split split) const {
  std::vector<std::vector<std::size_t>> out(num_classes());
  for (std::size_t i = 0; i < size(); ++i)
    if (splits[i] == split) out[std::size_t(labels[i])].push_back(i);
  return out;
}

std::size_t Dataset::count(Split split) const { return std::size_t(std::count(splits.begin(), splits.end(), split)); }

template <typename T>
Tensor<T> Dataset::images(std::span<const std::size_t> idx) const {
  const std::size_t n = image_bytes();
  Tensor<T> out(Shape{idx.size(), channels, height, width});
  auto dst = out.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= size()) throw DimensionError("dataset index " + std::to_string(idx[i]) + " out of range");
    const std::uint8_t* src = pixels.data() + idx[i] * n;
    for (std::size_t k = 0; k < n; ++k) dst[i * n + k] = T(byte_to_unit(src[k]));
  }
  return out;
}

std::vector<int> Dataset::labels_at(std::span<const std::size_t> idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (channels == 0 || height == 0 || width == 0) throw ConfigError("dataset has an empty image geometry");
  if (pixels.size() != size() * image_bytes()) throw ConfigError("dataset pixel buffer does not match its labels");
  if (splits.size() != size()) throw ConfigError("dataset split markers do not match its labels");
  for (int l : labels)
    if (l < 0 || std::size_t(l) >= num_classes())
      throw ConfigError("dataset label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes()) + ")");
}

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  mix(channels, 8);
  mix(height, 8);
  mix(width, 8);
  for (auto b : pixels) mix(b, 1);
  for (int l : labels) mix(std::uint32_t(l), 4);
  for (auto s : splits) mix(std::uint8_t(s), 1);
  return h;
}

std::uint8_t unit_to_byte(double v) {
  const double b = std::nearbyint((v + 1.0) * 127.5);
  return std::uint8_t(std::clamp(b, 0.0, 255.0));
}

void read_cifar_binary(const fs::path& file, Split split, Dataset& into, std::size_t expected_records) {
  const std::size_t image = into.image_bytes();
  const std::size_t record = image + 1;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(file.string() + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % record != 0)
    throw IoError(file.string() + ": truncated (" + std::to_string(bytes.size()) + " bytes is not a whole number of " +
                  std::to_string(record) + "-byte records)");
  const std::size_t n = bytes.size() / record;
  if (expected_records && n != expected_records)
    throw IoError(file.string() + ": expected " + std::to_string(expected_records) + " records, found " +
                  std::to_string(n));
  into.pixels.reserve(into.pixels.size() + n * image);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* rec = bytes.data() + r * record;
    if (rec[0] >= into.num_classes())
      throw IoError(file.string() + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]));
    into.labels.push_back(rec[0]);
    into.splits.push_back(split);
    into.pixels.insert(into.pixels.end(), rec + 1, rec + record);
  }
}

void write_cifar_binary(const fs::path& file, const Dataset& ds, Split split) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError(file.string() + ": cannot open for writing");
  const std::size_t image = ds.image_bytes();
  for (auto i : ds.indices(split)) {
    const char label = char(ds.labels[i]);
    out.write(&label, 1);
    out.write(reinterpret_cast<const char*>(ds.pixels.data() + i * image), std::streamsize(image));
  }
  if (!out) throw IoError(file.string() + ": write failed");
}

Dataset load_cifar10(const fs::path& dir) {
  Dataset ds;
  ds.channels = 3;
  ds.height = ds.width = 32;
  ds.class_names = {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};
  for (int b = 1; b <= 5; ++b)
    read_cifar_binary(dir / ("data_batch_" + std::to_string(b) + ".bin"), Split::Train, ds, 10000);
  read_cifar_binary(dir / "test_batch.bin", Split::Test, ds, 10000);
  return ds;
}

Dataset load_png_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) classes.push_back(e.path());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw IoError(dir.string() + ": no class subdirectories");

  Dataset ds;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ds.class_names.push_back(classes[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c]))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto img = read_png(files[i], 3);
      if (ds.height == 0) {
        ds.height = img.height;
        ds.width = img.width;
      } else if (img.height != ds.height || img.width != ds.width) {
        throw IoError(files[i].string() + ": size differs from the first image");
      }
      // Interleaved to planar.
      const std::size_t hw = img.height * img.width;
      for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t p = 0; p < hw; ++p) ds.pixels.push_back(img.bytes[p * 3 + ch]);
      ds.labels.push_back(int(c));
      ds.splits.push_back(i % 5 == 4 ? Split::Test : Split::Train);
    }
  }
  ds.validate();
  return ds;
}

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb toy_colour(std::size_t hue, Rng& rng) {
  const auto hi = std::uint8_t(200 + rng.below(56));
  const auto hi2 = std::uint8_t(200 + rng.below(56));
  const auto lo = std::uint8_t(rng.below(40));
  switch (hue) {
    case 0: return {hi, lo, lo};
    case 1: return {lo, hi, lo};
    case 2: return {lo, lo, hi};
    default: return {hi, hi2, lo};
  }
}

bool inside(std::size_t shape, long dx, long dy, long r) {
  switch (shape) {
    case 0: return dx * dx + dy * dy <= r * r;
    case 1: {
      const long h = r * 3 / 4;
      return std::labs(dx) <= h && std::labs(dy) <= h;
    }
    case 2: return dy >= -r && dy <= r && 2 * std::labs(dx) <= dy + r;
    default: {
      const long t = std::max(1L, r / 3);
      return (std::labs(dx) <= t && std::labs(dy) <= r) || (std::labs(dy) <= t && std::labs(dx) <= r);
    }
  }
}

}  // namespace

bool is_toy_hue(std::size_t hue, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto high = [](std::uint8_t v) { return v >= 180; };
  const auto low = [](std::uint8_t v) { return v <= 64; };
  switch (hue) {
    case 0: return high(r) && low(g) && low(b);
    case 1: return low(r) && high(g) && low(b);
    case 2: return low(r) && low(g) && high(b);
    default: return high(r) && high(g) && low(b);
  }
}

Dataset make_toy_shapes(std::size_t num_classes, std::size_t per_class, std::size_t size, std::uint64_t seed) {
  if (num_classes < 1 || num_classes > kToyMaxClasses)
    throw ConfigError("make_toy_shapes: K must be in [1, " + std::to_string(kToyMaxClasses) + "], got " +
                      std::to_string(num_classes));
  if (size < 8) throw ConfigError("make_toy_shapes: size must be at least 8");
  if (per_class < 1) throw ConfigError("make_toy_shapes: per_class must be positive");

  static const char* shape_names[] = {"circle", "square", "triangle", "cross"};
  static const char* hue_names[] = {"red", "green", "blue", "yellow"};
  Dataset ds;
  ds.channels = 3;
  ds.height = ds.width = size;
  for (std::size_t c = 0; c < num_classes; ++c)
    ds.class_names.push_back(std::string(hue_names[toy_hue_of_class(c)]) + "_" + shape_names[c % 4]);

  Rng rng(seed);
  const std::size_t hw = size * size;
  ds.pixels.reserve(num_classes * per_class * 3 * hw);
  for (std::size_t s = 0; s < per_class; ++s) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      const Rgb bg{std::uint8_t(rng.below(48)), std::uint8_t(rng.below(48)), std::uint8_t(rng.below(48))};
      const long r = long(size / 4 + rng.below(size / 8 + 1));
      const long cx = r + long(rng.below(size - 2 * std::size_t(r)));
      const long cy = r + long(rng.below(size - 2 * std::size_t(r)));
      const Rgb fg = toy_colour(toy_hue_of_class(c), rng);

      const std::size_t base = ds.pixels.size();
      ds.pixels.resize(base + 3 * hw);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          Rgb px = bg;
          const auto grain = std::uint8_t(rng.below(16));
          px.r = std::uint8_t(px.r + grain);
          px.g = std::uint8_t(px.g + grain);
          px.b = std::uint8_t(px.b + grain);
          if (inside(c % 4, long(x) - cx, long(y) - cy, r)) px = fg;
          const std::size_t p = y * size + x;
          ds.pixels[base + p] = px.r;
          ds.pixels[base + hw + p] = px.g;
          ds.pixels[base + 2 * hw + p] = px.b;
        }
      }
      ds.labels.push_back(int(c));
      ds.splits.push_back(s % 5 == 4 ? Split::Test : Split::Train);
    }
  }
  return ds;
}

template <typename T>
Tensor<T> random_crop_resize(const Tensor<T>& x, std::size_t crop, std::size_t out, Rng& rng, bool nearest) {
  if (x.rank() != 4) throw DimensionError("random_crop_resize: expected N x C x H x W, got " + nd::to_string(x.shape()));
  const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (crop == 0 || crop > std::min(H, W))
    throw DimensionError("random_crop_resize: crop " + std::to_string(crop) + " exceeds input " + std::to_string(H) +
                         "x" + std::to_string(W));
  if (out == 0) throw ConfigError("random_crop_resize: output size must be positive");

  Tensor<T> y(Shape{N, C, out, out});
  const double ratio = double(crop) / double(out);
  // Source coordinate and blend weight per output row/column.
  std::vector<std::size_t> i0(out), i1(out);
  std::vector<double> frac(out);
  for (std::size_t o = 0; o < out; ++o) {
    if (nearest) {
      i0[o] = i1[o] = std::min(crop - 1, std::size_t((double(o) + 0.5) * ratio));
      frac[o] = 0.0;
    } else {
      const double s = std::clamp((double(o) + 0.5) * ratio - 0.5, 0.0, double(crop - 1));
      i0[o] = std::size_t(s);
      i1[o] = std::min(i0[o] + 1, crop - 1);
      frac[o] = s - double(i0[o]);
    }
  }
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t oy = rng.below(H - crop + 1), ox = rng.below(W - crop + 1);
    for (std::size_t c = 0; c < C; ++c) {
      const T* src = x.data().data() + ((n * C + c) * H + oy) * W + ox;
      T* dst = y.data().data() + (n * C + c) * out * out;
      for (std::size_t a = 0; a < out; ++a) {
        const T* r0 = src + i0[a] * W;
        const T* r1 = src + i1[a] * W;
        const double fy = frac[a];
        for (std::size_t b = 0; b < out; ++b) {
          const double fx = frac[b];
          // a + (b - a) * f reproduces equal endpoints exactly.
          const double top = double(r0[i0[b]]) + (double(r0[i1[b]]) - double(r0[i0[b]])) * fx;
          const double bot = double(r1[i0[b]]) + (double(r1[i1[b]]) - double(r1[i0[b]])) * fx;
          dst[a * out + b] = T(top + (bot - top) * fy);
        }
      }
    }
  }
  return y;
}

template Tensor<float> Dataset::images<float>(std::span<const std::size_t>) const;
template Tensor<double> Dataset::images<double>(std::span<const std::size_t>) const;
template Tensor<float> random_crop_resize(const Tensor<float>&, std::size_t, std::size_t, Rng&, bool);
template Tensor<double> random_crop_resize(const Tensor<double>&, std::size_t, std::size_t, Rng&, bool);

}  // namespace artgan::data
