#include "artgan/data/image_io.hpp"

#include <png.h>

#include <fstream>

#include "artgan/data/dataset.hpp"
#include "artgan/errors.hpp"

namespace artgan::data {

namespace fs = std::filesystem;

template <typename T>
Image8 make_grid(const nd::Tensor<T>& images, std::size_t cols) {
  if (images.rank() != 4) throw DimensionError("make_grid: expected N x C x H x W, got " + nd::to_string(images.shape()));
  const std::size_t N = images.shape()[0], C = images.shape()[1], H = images.shape()[2], W = images.shape()[3];
  if (C != 1 && C != 3) throw DimensionError("make_grid: images must have 1 or 3 channels");
  if (N == 0 || cols == 0) throw ConfigError("make_grid: need at least one image and one column");
  cols = std::min(cols, N);
  const std::size_t rows = (N + cols - 1) / cols;
  Image8 img;
  img.width = cols * W;
  img.height = rows * H;
  img.channels = C;
  img.bytes.assign(img.width * img.height * C, 0);
  auto src = images.data();
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t gy = (n / cols) * H, gx = (n % cols) * W;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          img.bytes[((gy + y) * img.width + gx + x) * C + c] = unit_to_byte(double(src[((n * C + c) * H + y) * W + x]));
  }
  return img;
}

template Image8 make_grid(const nd::Tensor<float>&, std::size_t);
template Image8 make_grid(const nd::Tensor<double>&, std::size_t);

void write_png(const Image8& img, const fs::path& path) {
  png_image p{};
  p.version = PNG_IMAGE_VERSION;
  p.width = png_uint_32(img.width);
  p.height = png_uint_32(img.height);
  p.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&p, path.string().c_str(), 0, img.bytes.data(), 0, nullptr))
    throw IoError(path.string() + ": " + p.message);
}

void write_ppm(const Image8& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << (img.channels == 1 ? "P5\n" : "P6\n") << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.bytes.data()), std::streamsize(img.bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

void write_image(const Image8& img, const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".ppm" || ext == ".pgm")
    write_ppm(img, path);
  else
    write_png(img, path);
}

Image8 read_png(const fs::path& path, std::size_t channels) {
  if (channels != 1 && channels != 3) throw ConfigError("read_png: channels must be 1 or 3");
  png_image p{};
  p.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&p, path.string().c_str())) throw IoError(path.string() + ": " + p.message);
  p.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 img;
  img.width = p.width;
  img.height = p.height;
  img.channels = channels;
  img.bytes.resize(PNG_IMAGE_SIZE(p));
  if (!png_image_finish_read(&p, nullptr, img.bytes.data(), 0, nullptr)) {
    const std::string msg = p.message;
    png_image_free(&p);
    throw IoError(path.string() + ": " + msg);
  }
  return img;
}

}  // namespace artgan::data
