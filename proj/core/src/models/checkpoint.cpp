#include "artgan/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "artgan/errors.hpp"

namespace artgan::models {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'C', 'K'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  bool done() const { return pos_ == bytes_.size(); }

  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError(origin_ + ": truncated checkpoint");
  }
  std::span<const std::uint8_t> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace

template <typename T>
void Checkpoint::put(const std::string& name, const Tensor<T>& t) {
  Record r;
  r.name = name;
  r.dtype = dtype_of<T>();
  r.shape.assign(t.shape().begin(), t.shape().end());
  r.bytes.reserve(t.size() * sizeof(T));
  for (T v : t.data()) put_le(r.bytes, std::bit_cast<Bits<T>>(v));
  for (auto& existing : records_) {
    if (existing.name == name) {
      existing = std::move(r);
      return;
    }
  }
  records_.push_back(std::move(r));
}

template <typename T>
Tensor<T> Checkpoint::get(const std::string& name) const {
  const Record* r = find(name);
  if (!r) throw ConfigError("checkpoint: no record named '" + name + "'");
  if (r->dtype != dtype_of<T>()) {
    throw ConfigError("checkpoint: record '" + name + "' stored with a different precision");
  }
  nd::Shape shape(r->shape.begin(), r->shape.end());
  std::vector<T> data(nd::numel(shape));
  Reader rd(r->bytes, name);
  for (auto& v : data) v = std::bit_cast<T>(rd.le<Bits<T>>());
  return Tensor<T>(std::move(shape), std::move(data));
}

const Checkpoint::Record* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

template <typename T>
void Checkpoint::put_all(const std::string& prefix, const TensorList<T>& list) {
  for (const auto& [name, t] : list) put(prefix + "." + name, *t);
}

template <typename T>
void Checkpoint::get_all(const std::string& prefix, const TensorList<T>& list) const {
  for (const auto& [name, t] : list) {
    auto v = get<T>(prefix + "." + name);
    if (v.shape() != t->shape()) {
      throw DimensionError("checkpoint: '" + prefix + "." + name + "' has shape " + nd::to_string(v.shape()) +
                           ", model expects " + nd::to_string(t->shape()));
    }
    std::copy(v.data().begin(), v.data().end(), t->data().begin());
  }
}

std::vector<std::uint8_t> Checkpoint::encode() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kVersion);
  const std::string text = config.dump();
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& r : records_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    out.push_back(static_cast<std::uint8_t>(r.dtype));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto e : r.shape) put_le<std::uint64_t>(out, e);
    out.insert(out.end(), r.bytes.begin(), r.bytes.end());
  }
  return out;
}

Checkpoint Checkpoint::decode(std::span<const std::uint8_t> bytes, const std::string& origin) {
  Reader rd(bytes, origin);
  auto magic = rd.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw IoError(origin + ": not an AGCK checkpoint");
  const auto version = rd.le<std::uint32_t>();
  if (version != kVersion) throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  const auto len = rd.le<std::uint64_t>();
  auto text = rd.take(len);
  try {
    ck.config = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(origin + ": malformed config block: " + e.what());
  }
  while (!rd.done()) {
    Record r;
    const auto nlen = rd.le<std::uint32_t>();
    auto name = rd.take(nlen);
    r.name.assign(name.begin(), name.end());
    const auto tag = rd.le<std::uint8_t>();
    if (tag != 1 && tag != 2) throw IoError(origin + ": record '" + r.name + "' has unknown dtype tag");
    r.dtype = static_cast<DType>(tag);
    const auto rank = rd.le<std::uint32_t>();
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      r.shape.push_back(rd.le<std::uint64_t>());
      count *= r.shape.back();
    }
    auto data = rd.take(count * dtype_size(r.dtype));
    r.bytes.assign(data.begin(), data.end());
    ck.records_.push_back(std::move(r));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = encode();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path.string() + ": write failed");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string() + ": cannot open checkpoint");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(bytes, path.string());
}

template void Checkpoint::put<float>(const std::string&, const Tensor<float>&);
template void Checkpoint::put<double>(const std::string&, const Tensor<double>&);
template Tensor<float> Checkpoint::get<float>(const std::string&) const;
template Tensor<double> Checkpoint::get<double>(const std::string&) const;
template void Checkpoint::put_all<float>(const std::string&, const TensorList<float>&);
template void Checkpoint::put_all<double>(const std::string&, const TensorList<double>&);
template void Checkpoint::get_all<float>(const std::string&, const TensorList<float>&) const;
template void Checkpoint::get_all<double>(const std::string&, const TensorList<double>&) const;

}  // namespace artgan::models
