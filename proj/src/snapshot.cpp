#include "mdlcl/snapshot.h"

#include <bit>
#include <cstring>

namespace mdlcl {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {
template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    std::memcpy(&v, raw, sizeof(T));
  }
  return v;
}
}  // namespace

template <class T>
void BinaryWriter::put(T v) {
  v = byteswap_if_big(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf_.insert(buf_.end(), p, p + sizeof(T));
}

void BinaryWriter::magic(std::string_view tag) { buf_.insert(buf_.end(), tag.begin(), tag.end()); }
void BinaryWriter::u8(std::uint8_t v) { put(v); }
void BinaryWriter::u32(std::uint32_t v) { put(v); }
void BinaryWriter::u64(std::uint64_t v) { put(v); }
void BinaryWriter::i32(std::int32_t v) { put(v); }
void BinaryWriter::f64(double v) { put(v); }

void BinaryWriter::tensor(const Tensor& t) {
  u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
  for (double v : t.data()) f64(v);
}

void BinaryWriter::doubles(std::span<const double> values) {
  u64(values.size());
  for (double v : values) f64(v);
}

template <class T>
T BinaryReader::get() {
  if (pos_ + sizeof(T) > bytes_.size()) throw SnapshotError("snapshot truncated at byte " + std::to_string(pos_));
  T v;
  std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
  pos_ += sizeof(T);
  return byteswap_if_big(v);
}

void BinaryReader::expect_magic(std::string_view tag) {
  if (pos_ + tag.size() > bytes_.size() ||
      std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0)
    throw SnapshotError("bad snapshot magic, expected '" + std::string(tag) + "'");
  pos_ += tag.size();
}

std::uint8_t BinaryReader::u8() { return get<std::uint8_t>(); }
std::uint32_t BinaryReader::u32() { return get<std::uint32_t>(); }
std::uint64_t BinaryReader::u64() { return get<std::uint64_t>(); }
std::int32_t BinaryReader::i32() { return get<std::int32_t>(); }
double BinaryReader::f64() { return get<double>(); }

Tensor BinaryReader::tensor() {
  const std::uint32_t rank = u32();
  if (rank > 8) throw SnapshotError("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = u32();
  const std::size_t n = shape_size(shape);
  if (n * sizeof(double) > bytes_.size() - pos_) throw SnapshotError("snapshot truncated inside tensor data");
  std::vector<double> data(n);
  for (double& v : data) v = f64();
  return Tensor(std::move(shape), std::move(data));
}

std::vector<double> BinaryReader::doubles() {
  const std::uint64_t n = u64();
  if (n * sizeof(double) > bytes_.size() - pos_) throw SnapshotError("snapshot truncated inside vector");
  std::vector<double> out(n);
  for (double& v : out) v = f64();
  return out;
}

std::uint64_t fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mdlcl
