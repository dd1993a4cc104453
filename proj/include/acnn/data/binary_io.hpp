#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "acnn/core/error.hpp"

namespace acnn::io {

// Little-endian encoders; host byte order is irrelevant.
inline void put_u8(std::vector<char>& b, std::uint8_t v) { b.push_back(static_cast<char>(v)); }
inline void put_u16(std::vector<char>& b, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u32(std::vector<char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::vector<char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::vector<char>& b, float v) { put_u32(b, std::bit_cast<std::uint32_t>(v)); }
inline void put_bytes(std::vector<char>& b, const std::string& s) { b.insert(b.end(), s.begin(), s.end()); }

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  require(v <= 0xFFFFFFFFu, ErrorCategory::invalid_argument, std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

/// Bounds-checked little-endian decoder over an in-memory file.
class Reader {
 public:
  Reader(std::vector<char> bytes, std::string source) : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

  void need(std::size_t n, const char* what) const {
    require(remaining() >= n, ErrorCategory::format,
            source_ + ": truncated file (" + what + " needs " + std::to_string(n) + " bytes, " +
                std::to_string(remaining()) + " left)");
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(uint_le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint_le(4, what)); }
  std::uint64_t u64(const char* what) { return uint_le(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::uint64_t uint_le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCategory::io, "write failed for " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<char>(text.begin(), text.end()));
}

}  // namespace acnn::io
