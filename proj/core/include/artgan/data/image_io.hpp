#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "artgan/ndgrad/tensor.hpp"

namespace artgan::data {

/// Interleaved 8-bit image, rows top to bottom.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> bytes;
};

/// Tiles N x C x H x W images in [-1, 1] row-major into a grid with `cols`
/// columns; unused cells stay black.
template <typename T>
Image8 make_grid(const nd::Tensor<T>& images, std::size_t cols);

void write_png(const Image8& img, const std::filesystem::path& path);
/// Binary P6 (RGB) or P5 (gray).
void write_ppm(const Image8& img, const std::filesystem::path& path);
/// PPM for a .ppm/.pgm extension, PNG otherwise.
void write_image(const Image8& img, const std::filesystem::path& path);
/// Decodes any PNG to `channels` (1 or 3) interleaved channels.
Image8 read_png(const std::filesystem::path& path, std::size_t channels = 3);

template <typename T>
void write_image_grid(const nd::Tensor<T>& images, const std::filesystem::path& path, std::size_t cols) {
  write_image(make_grid(images, cols), path);
}

}  // namespace artgan::data
