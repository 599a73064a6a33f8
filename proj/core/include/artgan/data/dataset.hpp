#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "artgan/ndgrad/tensor.hpp"
#include "artgan/rng.hpp"

namespace artgan::data {

using nd::Shape;
using nd::Tensor;

enum class Split : std::uint8_t { Train = 0, Test = 1 };

/// Labelled images kept as 8-bit pixels; every accessor maps byte b to
/// b / 127.5 - 1, so 0 -> -1 and 255 -> +1 and values never leave [-1, 1].
struct Dataset {
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  ///< N x C x H x W, planar per image
  std::vector<int> labels;
  std::vector<Split> splits;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::size_t image_bytes() const { return channels * height * width; }

  /// Indices of all samples in `split`, ascending.
  std::vector<std::size_t> indices(Split split) const;
  /// indices(split) grouped by label.
  std::vector<std::vector<std::size_t>> by_class(Split split) const;
  std::size_t count(Split split) const;

  /// Gathers images into an N x C x H x W tensor in [-1, 1].
  template <typename T>
  Tensor<T> images(std::span<const std::size_t> idx) const;
  std::vector<int> labels_at(std::span<const std::size_t> idx) const;

  /// Throws ConfigError on inconsistent sizes or out-of-range labels.
  void validate() const;
  /// FNV-1a over geometry, pixels, labels and split markers.
  std::uint64_t checksum() const;
};

inline float byte_to_unit(std::uint8_t b) { return float(b) / 127.5f - 1.0f; }
/// Inverse map, rounding to nearest and clamping to [0, 255].
std::uint8_t unit_to_byte(double v);

/// One CIFAR-style binary file: records of 1 label byte followed by
/// C*H*W pixel bytes in planar R, G, B order. `expected_records` of 0
/// accepts any whole number of records.
void read_cifar_binary(const std::filesystem::path& file, Split split, Dataset& into,
                       std::size_t expected_records = 0);
/// Writes the samples of `split` in the same layout.
void write_cifar_binary(const std::filesystem::path& file, const Dataset& ds, Split split);

/// data_batch_1..5.bin (train) and test_batch.bin (test), 10000 records each.
Dataset load_cifar10(const std::filesystem::path& dir);

/// One subdirectory per class (sorted by name), each holding PNG files of
/// identical size; RGB is enforced. Every fifth file of a class is a test sample.
Dataset load_png_directory(const std::filesystem::path& dir);

/// Number of distinct (shape, hue) classes make_toy_shapes can emit.
inline constexpr std::size_t kToyMaxClasses = 16;

/// Synthetic RGB classes: class i draws shape i % 4 (circle, square,
/// triangle, cross) in palette hue (i % 4 + i / 4) % 4 (red, green, blue,
/// yellow) over a dark jittered background with jittered position and
/// scale. Integer arithmetic only, so the bytes depend on nothing but the
/// arguments. Samples interleave classes; every fifth sample of a class
/// belongs to the test split.
Dataset make_toy_shapes(std::size_t num_classes, std::size_t per_class, std::size_t size, std::uint64_t seed);

/// True if (r, g, b) is a foreground pixel of the given palette hue.
bool is_toy_hue(std::size_t hue, std::uint8_t r, std::uint8_t g, std::uint8_t b);
inline std::size_t toy_hue_of_class(std::size_t cls) { return (cls % 4 + cls / 4) % 4; }

/// Per-image uniform-offset crop of `crop` x `crop` followed by a resize to
/// `out` x `out`: bilinear with half-pixel centres, or nearest when asked.
template <typename T>
Tensor<T> random_crop_resize(const Tensor<T>& x, std::size_t crop, std::size_t out, Rng& rng, bool nearest = false);

}  // namespace artgan::data
