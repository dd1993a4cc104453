#pragma once

#include <filesystem>
#include <string>

#include "acnn/core/complex_volume.hpp"
#include "acnn/data/binary_io.hpp"
#include "acnn/sampling/cartesian_mask.hpp"

namespace acnn {

inline constexpr std::uint16_t kspv_version = 1;
inline constexpr std::uint16_t msk1_version = 1;

/// KSPV: "KSPV", u16 version, u8 domain, u32 slices/coils/height/width,
/// then (re, im) f32 pairs in slice, coil, row, column order.
inline std::vector<char> encode_volume(const ComplexVolume& v) {
  std::vector<char> b;
  b.reserve(23 + v.size() * 8);
  io::put_bytes(b, "KSPV");
  io::put_u16(b, kspv_version);
  io::put_u8(b, static_cast<std::uint8_t>(v.domain()));
  io::put_u32(b, io::checked_u32(v.n_slices(), "n_slices"));
  io::put_u32(b, io::checked_u32(v.n_coils(), "n_coils"));
  io::put_u32(b, io::checked_u32(v.height(), "height"));
  io::put_u32(b, io::checked_u32(v.width(), "width"));
  for (const auto& z : v.data()) {
    io::put_f32(b, z.real());
    io::put_f32(b, z.imag());
  }
  return b;
}

inline ComplexVolume decode_volume(io::Reader& r) {
  require(r.remaining() >= 4 && r.bytes(4, "magic") == "KSPV", ErrorCategory::format,
          r.source() + ": bad magic (not a KSPV volume)");
  const auto version = r.u16("version");
  require(version == kspv_version, ErrorCategory::format,
          r.source() + ": version mismatch (file " + std::to_string(version) + ", reader " +
              std::to_string(kspv_version) + ")");
  const auto tag = r.u8("domain");
  require(tag <= 1, ErrorCategory::format, r.source() + ": unknown domain tag " + std::to_string(tag));
  const std::size_t s = r.u32("n_slices"), c = r.u32("n_coils"), h = r.u32("height"), w = r.u32("width");
  std::size_t count = 0;
  const bool overflow = __builtin_mul_overflow(s, c, &count) || __builtin_mul_overflow(count, h, &count) ||
                        __builtin_mul_overflow(count, w, &count) || count > r.remaining() / 8;
  require(!overflow, ErrorCategory::format,
          r.source() + ": truncated file (header declares " + std::to_string(s) + "x" + std::to_string(c) + "x" +
              std::to_string(h) + "x" + std::to_string(w) + " samples, payload has " +
              std::to_string(r.remaining()) + " bytes)");
  ComplexVolume v(s, c, h, w, static_cast<Domain>(tag));
  for (auto& z : v.data()) {
    const float re = r.f32("sample");
    const float im = r.f32("sample");
    z = cfloat(re, im);
  }
  require(r.remaining() == 0, ErrorCategory::format,
          r.source() + ": " + std::to_string(r.remaining()) + " trailing bytes after payload");
  return v;
}

inline void write_volume(const std::filesystem::path& path, const ComplexVolume& v) {
  io::write_file(path, encode_volume(v));
}

inline ComplexVolume read_volume(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path), path.string());
  return decode_volume(r);
}

/// MSK1: "MSK1", u16 version, u32 height, u32 width, then H*W bytes of 0/1.
inline std::vector<char> encode_mask(const CartesianMask& m) {
  std::vector<char> b;
  io::put_bytes(b, "MSK1");
  io::put_u16(b, msk1_version);
  io::put_u32(b, io::checked_u32(m.height, "height"));
  io::put_u32(b, io::checked_u32(m.width, "width"));
  for (auto bit : m.bits) io::put_u8(b, bit ? 1 : 0);
  return b;
}

inline CartesianMask decode_mask(io::Reader& r) {
  require(r.remaining() >= 4 && r.bytes(4, "magic") == "MSK1", ErrorCategory::format,
          r.source() + ": bad magic (not an MSK1 mask)");
  const auto version = r.u16("version");
  require(version == msk1_version, ErrorCategory::format,
          r.source() + ": version mismatch (file " + std::to_string(version) + ", reader " +
              std::to_string(msk1_version) + ")");
  CartesianMask m;
  m.height = r.u32("height");
  m.width = r.u32("width");
  require(m.height == 0 || m.width <= r.remaining() / m.height, ErrorCategory::format,
          r.source() + ": truncated file (mask payload shorter than " + std::to_string(m.height) + "x" +
              std::to_string(m.width) + ")");
  m.bits.resize(m.height * m.width);
  for (auto& bit : m.bits) {
    bit = r.u8("mask byte");
    require(bit <= 1, ErrorCategory::format, r.source() + ": mask byte other than 0/1");
  }
  require(r.remaining() == 0, ErrorCategory::format, r.source() + ": trailing bytes after mask payload");
  const std::size_t lines = m.sampled_columns().size();
  m.acceleration = lines ? static_cast<double>(m.width) / static_cast<double>(lines) : 0.0;
  return m;
}

inline void write_mask(const std::filesystem::path& path, const CartesianMask& m) {
  io::write_file(path, encode_mask(m));
}

inline CartesianMask read_mask(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path), path.string());
  return decode_mask(r);
}

}  // namespace acnn
