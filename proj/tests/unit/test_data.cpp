#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "artgan/data/dataset.hpp"
#include "artgan/data/image_io.hpp"
#include "artgan/errors.hpp"

using namespace artgan;
using namespace artgan::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("artgan_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("pixel byte mapping endpoints") {
  CHECK(byte_to_unit(0) == -1.0f);
  CHECK(byte_to_unit(255) == 1.0f);
  CHECK(unit_to_byte(-1.0) == 0);
  CHECK(unit_to_byte(1.0) == 255);
  CHECK(unit_to_byte(7.0) == 255);
  for (int b = 0; b < 256; ++b) CHECK(unit_to_byte(byte_to_unit(std::uint8_t(b))) == b);
}

TEST_CASE("toy shapes are deterministic") {
  const auto a = make_toy_shapes(4, 500, 16, 7);
  const auto b = make_toy_shapes(4, 500, 16, 7);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.pixels == b.pixels);
  CHECK(make_toy_shapes(4, 500, 16, 8).checksum() != a.checksum());
  CHECK(a.size() == 2000);
  CHECK(a.count(Split::Train) == 1600);
  CHECK(a.count(Split::Test) == 400);
  for (const auto& cls : a.by_class(Split::Test)) CHECK(cls.size() == 100);
  a.validate();
  CHECK_THROWS_AS(make_toy_shapes(17, 10, 16, 1), ConfigError);
}

TEST_CASE("toy shapes carry their class hue and no other") {
  const auto ds = make_toy_shapes(16, 6, 16, 3);
  const std::size_t hw = ds.height * ds.width;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto* px = ds.pixels.data() + i * ds.image_bytes();
    std::size_t own = 0, other = 0;
    const auto hue = toy_hue_of_class(std::size_t(ds.labels[i]));
    for (std::size_t p = 0; p < hw; ++p) {
      for (std::size_t h = 0; h < 4; ++h) {
        if (!is_toy_hue(h, px[p], px[hw + p], px[2 * hw + p])) continue;
        (h == hue ? own : other) += 1;
      }
    }
    CHECK(own >= 1);
    CHECK(other == 0);
  }
  // 16 classes are 16 distinct (shape, hue) pairs.
  std::set<std::string> names(ds.class_names.begin(), ds.class_names.end());
  CHECK(names.size() == 16);
}

TEST_CASE("images are gathered into [-1, 1]") {
  const auto ds = make_toy_shapes(2, 5, 8, 1);
  const std::vector<std::size_t> idx{0, 3};
  const auto t = ds.images<double>(idx);
  CHECK(t.shape() == nd::Shape{2, 3, 8, 8});
  for (double v : t.data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(t[0] == double(byte_to_unit(ds.pixels[0])));
  CHECK(ds.labels_at(idx) == std::vector<int>{0, 1});
}

TEST_CASE("cifar binary round trip and errors") {
  const auto dir = scratch("cifar");
  auto ds = make_toy_shapes(4, 10, 8, 2);
  write_cifar_binary(dir / "train.bin", ds, Split::Train);
  CHECK(fs::file_size(dir / "train.bin") == ds.count(Split::Train) * (1 + 3 * 64));

  Dataset back;
  back.height = back.width = 8;
  back.class_names = ds.class_names;
  read_cifar_binary(dir / "train.bin", Split::Train, back, ds.count(Split::Train));
  CHECK(back.size() == ds.count(Split::Train));
  for (std::size_t k = 0; k < back.size(); ++k) CHECK(back.labels[k] == ds.labels[ds.indices(Split::Train)[k]]);

  Dataset wrong = back;
  CHECK_THROWS_AS(read_cifar_binary(dir / "train.bin", Split::Train, wrong, 5), IoError);

  // A CIFAR-10 directory with a truncated first batch names that file.
  std::ofstream(dir / "data_batch_1.bin", std::ios::binary) << std::string(100, '\0');
  try {
    load_cifar10(dir);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("data_batch_1.bin") != std::string::npos);
  }
  CHECK_THROWS_AS(load_cifar10(dir / "missing"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("random_crop_resize") {
  Rng rng(5);
  Tensor<double> x(nd::Shape{2, 3, 96, 96});
  for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);
  CHECK(random_crop_resize(x, 84, 64, rng).shape() == nd::Shape{2, 3, 64, 64});
  CHECK(random_crop_resize(x, 96, 96, rng).vector() == x.vector());
  CHECK(random_crop_resize(x, 96, 96, rng, true).vector() == x.vector());
  CHECK_THROWS_AS(random_crop_resize(x, 97, 64, rng), DimensionError);

  Tensor<double> flat(nd::Shape{1, 3, 20, 20}, 0.375);
  for (double v : random_crop_resize(flat, 13, 31, rng).data()) CHECK(v == 0.375);

  Rng a(9), b(9);
  CHECK(random_crop_resize(x, 50, 40, a).vector() == random_crop_resize(x, 50, 40, b).vector());
  for (double v : random_crop_resize(x, 50, 17, a).data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("image grid layout") {
  Tensor<double> one(nd::Shape{1, 3, 2, 2}, {-1, 1, -1, 1, 1, 1, 1, 1, -1, -1, -1, -1});
  const auto g = make_grid(one, 4);
  CHECK(g.width == 2);
  CHECK(g.height == 2);
  // Pixel (0,0) is (-1, 1, -1) -> (0, 255, 0).
  CHECK(g.bytes[0] == 0);
  CHECK(g.bytes[1] == 255);
  CHECK(g.bytes[2] == 0);

  Tensor<float> many(nd::Shape{100, 3, 32, 32}, 0.0f);
  const auto big = make_grid(many, 10);
  CHECK(big.width == 320);
  CHECK(big.height == 320);
  const auto strip = make_grid(Tensor<float>(nd::Shape{10, 3, 16, 16}), 10);
  CHECK(strip.width == 160);
}

TEST_CASE("png and ppm export") {
  const auto dir = scratch("png");
  Rng rng(2);
  Tensor<double> imgs(nd::Shape{6, 3, 8, 8});
  for (auto& v : imgs.data()) v = rng.uniform(-1.0, 1.0);
  write_image_grid(imgs, dir / "a.png", 3);
  write_image_grid(imgs, dir / "b.png", 3);
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
  const auto back = read_png(dir / "a.png");
  const auto grid = make_grid(imgs, 3);
  CHECK(back.width == 24);
  CHECK(back.height == 16);
  CHECK(back.bytes == grid.bytes);

  write_image_grid(imgs, dir / "a.ppm", 3);
  const auto ppm = slurp(dir / "a.ppm");
  const std::string header = "P6\n24 16\n255\n";
  REQUIRE(ppm.size() == header.size() + grid.bytes.size());
  CHECK(std::string(ppm.begin(), ppm.begin() + long(header.size())) == header);

  CHECK_THROWS_AS(write_png(grid, dir / "no" / "such" / "dir.png"), IoError);
  CHECK_THROWS_AS(read_png(dir / "a.ppm"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("png directory ingestion") {
  const auto dir = scratch("pngdir");
  const auto ds = make_toy_shapes(2, 6, 8, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto cls = dir / ds.class_names[std::size_t(ds.labels[i])];
    fs::create_directories(cls);
    const std::vector<std::size_t> idx{i};
    char name[32];
    std::snprintf(name, sizeof name, "%03zu.png", i);
    write_image_grid(ds.images<double>(idx), cls / name, 1);
  }
  const auto back = load_png_directory(dir);
  CHECK(back.num_classes() == 2);
  CHECK(back.size() == ds.size());
  CHECK(back.count(Split::Test) == 2);
  // Labels follow the sorted directory names.
  CHECK(back.class_names.front() == "green_square");
  fs::remove_all(dir);
}
