#pragma once

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bvlab/errors.hpp"
#include "bvlab/grid.hpp"

// GF1 layout, little endian:
//   "GFBV" | u32 version = 1 | u8 dim | i32 level | i64 origin[dim] |
//   u64 extent[dim] | f64 values (row-major) | u32 crc32 of everything before
// GFH1 is the same with magic "GFHB", dim = 3 and a u8 anisotropic-axis
// index (2, the t axis) directly after the dim byte.

namespace bvlab {

static_assert(std::endian::native == std::endian::little, "GF1 writer assumes a little-endian host");

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > end_) fail(ErrorCode::FormatError, "truncated grid file");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (n > 0) {
    uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FormatError, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline constexpr char kMagicEuclidean[4] = {'G', 'F', 'B', 'V'};
inline constexpr char kMagicHeisenberg[4] = {'G', 'F', 'H', 'B'};
inline constexpr std::uint32_t kVersion = 1;

template <class Geom>
constexpr bool is_heisenberg = std::is_same_v<Geom, HeisenbergGeometry>;

}  // namespace detail

template <class Geom>
std::vector<unsigned char> encode_grid(const Field<Geom>& u) {
  constexpr int R = Geom::rank;
  detail::ByteWriter w;
  w.put_bytes(detail::is_heisenberg<Geom> ? detail::kMagicHeisenberg : detail::kMagicEuclidean, 4);
  w.put(detail::kVersion);
  w.put(static_cast<std::uint8_t>(R));
  if constexpr (detail::is_heisenberg<Geom>) w.put(static_cast<std::uint8_t>(2));
  w.put(static_cast<std::int32_t>(u.level()));
  for (int d = 0; d < R; ++d) w.put(static_cast<std::int64_t>(u.box().origin[d]));
  for (int d = 0; d < R; ++d) w.put(static_cast<std::uint64_t>(u.box().extent[d]));
  for (double v : u.values()) w.put(v);
  auto& b = w.bytes();
  w.put(detail::crc32_of(b.data(), b.size()));
  return std::move(b);
}

template <class Geom>
void write_grid(const std::filesystem::path& path, const Field<Geom>& u) {
  auto bytes = encode_grid(u);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::FormatError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::FormatError, "short write to " + path.string());
}

using AnyGrid = std::variant<GridFunction<2>, GridFunction<3>, HGridFunction>;

inline AnyGrid decode_grid(const std::vector<unsigned char>& buf) {
  if (buf.size() < 4 + 4 + 1 + 4 + 4) fail(ErrorCode::FormatError, "grid file too short");
  const std::size_t body = buf.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + body, 4);
  if (stored != detail::crc32_of(buf.data(), body)) fail(ErrorCode::FormatError, "CRC mismatch");

  detail::ByteReader r(buf, body);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
  const bool heis = std::memcmp(magic, detail::kMagicHeisenberg, 4) == 0;
  if (!heis && std::memcmp(magic, detail::kMagicEuclidean, 4) != 0) fail(ErrorCode::FormatError, "bad magic");
  if (r.get<std::uint32_t>() != detail::kVersion) fail(ErrorCode::FormatError, "unsupported version");
  const int dim = r.get<std::uint8_t>();
  if (heis && (dim != 3 || r.get<std::uint8_t>() != 2)) fail(ErrorCode::FormatError, "bad Heisenberg header");
  const int level = r.get<std::int32_t>();
  check_level(level);

  auto read_body = [&]<class Geom>(std::type_identity<Geom>) -> AnyGrid {
    constexpr int R = Geom::rank;
    Box<R> box;
    for (int d = 0; d < R; ++d) box.origin[d] = r.get<std::int64_t>();
    for (int d = 0; d < R; ++d) {
      auto e = r.get<std::uint64_t>();
      if (e > (std::uint64_t{1} << 40)) fail(ErrorCode::FormatError, "extent out of range");
      box.extent[d] = static_cast<std::int64_t>(e);
    }
    if (r.remaining() != box.size() * sizeof(double)) fail(ErrorCode::FormatError, "payload size does not match extents");
    std::vector<double> vals(box.size());
    for (double& v : vals) v = r.get<double>();
    return Field<Geom>(level, box, std::move(vals));
  };
  if (heis) return read_body(std::type_identity<HeisenbergGeometry>{});
  if (dim == 2) return read_body(std::type_identity<Euclidean<2>>{});
  if (dim == 3) return read_body(std::type_identity<Euclidean<3>>{});
  fail(ErrorCode::BadDimension, "unsupported grid dimension " + std::to_string(dim));
}

inline AnyGrid read_any(const std::filesystem::path& path) { return decode_grid(detail::slurp(path)); }

template <class Geom>
Field<Geom> read_grid(const std::filesystem::path& path) {
  auto any = read_any(path);
  if (auto* u = std::get_if<Field<Geom>>(&any)) return std::move(*u);
  fail(ErrorCode::FormatError, path.string() + " holds a different grid kind");
}

}  // namespace bvlab
