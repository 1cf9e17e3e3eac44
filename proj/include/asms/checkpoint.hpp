#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "asms/error.hpp"
#include "asms/nn.hpp"

namespace asms::nn {

// Layout (all integers little-endian):
//   "FMAP" | u16 version | u8 activation | u8 head | u32 layers
//   | layers x (u32 in, u32 out) | u64 count | count x f64 | u32 crc32
// The CRC covers every byte before it.
inline constexpr char kCheckpointMagic[4] = {'F', 'M', 'A', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace ckpt_detail {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  auto u = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2,
                                                                       std::uint16_t, std::uint8_t>>>;
    if (pos_ + sizeof(T) > b_.size()) throw DataError("checkpoint truncated");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

inline std::vector<std::uint8_t> serialize(const ModelParams& p) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  ckpt_detail::put<std::uint16_t>(out, kCheckpointVersion);
  ckpt_detail::put<std::uint8_t>(out, p.activation() == Activation::tanh ? 0 : 1);
  ckpt_detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(p.head()));
  ckpt_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.shapes().size()));
  for (const auto& s : p.shapes()) {
    ckpt_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.in));
    ckpt_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.out));
  }
  ckpt_detail::put<std::uint64_t>(out, p.size());
  for (double v : p.values()) ckpt_detail::put<double>(out, v);
  ckpt_detail::put<std::uint32_t>(out, crc32_of(out.data(), out.size()));
  return out;
}

/// Size in bytes of serialize(p) for a model with these shapes.
inline std::size_t serialized_size(const std::vector<LayerShape>& shapes) {
  return 4 + 2 + 1 + 1 + 4 + 8 * shapes.size() + 8 + 8 * ModelParams::count_for(shapes) + 4;
}

inline ModelParams deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 1 + 1 + 4 + 8 + 4 ||
      std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint (bad magic)");
  }
  const std::uint32_t stored = [&] {
    std::uint32_t c = 0;
    for (int i = 0; i < 4; ++i) c |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    return c;
  }();
  if (stored != crc32_of(bytes.data(), bytes.size() - 4)) {
    throw DataError("checkpoint CRC mismatch (corrupt file)");
  }
  ckpt_detail::Reader r(bytes);
  r.get<std::uint32_t>();  // magic
  if (r.get<std::uint16_t>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
  const auto act = r.get<std::uint8_t>();
  const auto head = r.get<std::uint8_t>();
  if (act > 1 || head > 1) throw DataError("checkpoint has unknown activation/head tag");
  const auto layers = r.get<std::uint32_t>();
  if (layers == 0 || layers > 64) throw DataError("checkpoint has an implausible layer count");
  std::vector<LayerShape> shapes;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    shapes.push_back({static_cast<int>(in), static_cast<int>(out)});
  }
  const auto count = r.get<std::uint64_t>();
  if (count != ModelParams::count_for(shapes) || bytes.size() != serialized_size(shapes)) {
    throw DataError("checkpoint parameter count does not match its shapes");
  }
  ModelParams p(shapes, act == 0 ? Activation::tanh : Activation::relu, static_cast<Head>(head));
  auto v = p.mutable_values();
  for (std::uint64_t k = 0; k < count; ++k) v[k] = r.get<double>();
  return p;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
  const auto bytes = serialize(p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for checkpoint '" + path.string() + "'");
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace asms::nn
