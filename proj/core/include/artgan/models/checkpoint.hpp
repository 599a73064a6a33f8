#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artgan/models/layers.hpp"

namespace artgan::models {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::F32; }
template <>
constexpr DType dtype_of<double>() { return DType::F64; }

/// Binary container, all integers little-endian:
///
///   "AGCK"                      4 bytes magic
///   version                     u32 (currently 1)
///   config length               u64, then that many bytes of JSON text
///   records until end of file:
///     name length               u32, then name bytes
///     dtype                     u8 (1 = f32, 2 = f64)
///     rank                      u32, then rank x u64 extents
///     raw data                  product(extents) little-endian IEEE-754 values
///
/// Records keep their raw bytes, so load -> save reproduces a file exactly.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  struct Record {
    std::string name;
    DType dtype = DType::F64;
    std::vector<std::uint64_t> shape;
    std::vector<std::uint8_t> bytes;
  };

  nlohmann::json config = nlohmann::json::object();

  template <typename T>
  void put(const std::string& name, const Tensor<T>& t);
  /// Throws ConfigError if missing or stored with another dtype.
  template <typename T>
  Tensor<T> get(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const Record* find(const std::string& name) const;
  const std::vector<Record>& records() const { return records_; }

  /// Puts every named tensor under `prefix.`.
  template <typename T>
  void put_all(const std::string& prefix, const TensorList<T>& list);
  /// Copies stored values into every named tensor; shapes must match.
  template <typename T>
  void get_all(const std::string& prefix, const TensorList<T>& list) const;

  std::vector<std::uint8_t> encode() const;
  static Checkpoint decode(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<Record> records_;
};

}  // namespace artgan::models
