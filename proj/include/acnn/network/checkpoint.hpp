#pragma once

#include <filesystem>
#include <string>

#include "acnn/data/binary_io.hpp"
#include "acnn/network/model.hpp"

namespace acnn {

inline constexpr std::uint16_t ackp_version = 1;

struct Checkpoint {
  Model<float> model;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
};

inline void encode_model_config(std::vector<char>& b, const ModelConfig& c) {
  io::put_u8(b, static_cast<std::uint8_t>(c.kind));
  io::put_u32(b, io::checked_u32(c.n_slices, "n_slices"));
  io::put_u32(b, io::checked_u32(c.n_coils, "n_coils"));
  io::put_u32(b, io::checked_u32(c.encoder_widths.size(), "levels"));
  for (auto w : c.encoder_widths) io::put_u32(b, io::checked_u32(w, "width"));
  io::put_u32(b, io::checked_u32(c.bottleneck_width, "bottleneck_width"));
  io::put_u32(b, io::checked_u32(c.final_hidden_width, "final_hidden_width"));
  io::put_u8(b, static_cast<std::uint8_t>(c.attention.mode));
  io::put_u8(b, c.attention.channel ? 1 : 0);
  io::put_u8(b, c.attention.frequency ? 1 : 0);
  io::put_u32(b, io::checked_u32(c.input_size, "input_size"));
}

inline ModelConfig decode_model_config(io::Reader& r) {
  ModelConfig c;
  const auto kind = r.u8("model kind");
  require(kind <= 2, ErrorCategory::format, r.source() + ": unknown model kind " + std::to_string(kind));
  c.kind = static_cast<ModelKind>(kind);
  c.n_slices = r.u32("n_slices");
  c.n_coils = r.u32("n_coils");
  const std::size_t levels = r.u32("levels");
  require(levels <= 16, ErrorCategory::format, r.source() + ": implausible level count");
  c.encoder_widths.resize(levels);
  for (auto& w : c.encoder_widths) w = r.u32("width");
  c.bottleneck_width = r.u32("bottleneck_width");
  c.final_hidden_width = r.u32("final_hidden_width");
  const auto mode = r.u8("attention mode");
  require(mode <= 2, ErrorCategory::format, r.source() + ": unknown attention mode " + std::to_string(mode));
  c.attention.mode = static_cast<AttentionMode>(mode);
  c.attention.channel = r.u8("attention channel") != 0;
  c.attention.frequency = r.u8("attention frequency") != 0;
  c.input_size = r.u32("input_size");
  return c;
}

/// ACKP: "ACKP", u16 version, model config, u64 seed, u32 epoch, u32 count,
/// then per parameter (declaration order): u32 name length, name, u32 rank,
/// u32 dims, f32 values.
inline std::vector<char> encode_checkpoint(const Model<float>& model, std::uint64_t seed, std::uint32_t epoch) {
  std::vector<char> b;
  io::put_bytes(b, "ACKP");
  io::put_u16(b, ackp_version);
  encode_model_config(b, model.config());
  io::put_u64(b, seed);
  io::put_u32(b, epoch);
  io::put_u32(b, io::checked_u32(model.params().size(), "parameter count"));
  for (const auto& p : model.params()) {
    io::put_u32(b, io::checked_u32(p.name.size(), "name length"));
    io::put_bytes(b, p.name);
    io::put_u32(b, io::checked_u32(p.value.rank(), "rank"));
    for (auto d : p.value.shape()) io::put_u32(b, io::checked_u32(d, "dimension"));
    for (float v : p.value.storage()) io::put_f32(b, v);
  }
  return b;
}

inline Checkpoint decode_checkpoint(io::Reader& r) {
  require(r.remaining() >= 4 && r.bytes(4, "magic") == "ACKP", ErrorCategory::format,
          r.source() + ": bad magic (not an ACKP checkpoint)");
  const auto version = r.u16("version");
  require(version == ackp_version, ErrorCategory::format,
          r.source() + ": version mismatch (file " + std::to_string(version) + ", reader " +
              std::to_string(ackp_version) + ")");
  Checkpoint ck{Model<float>(decode_model_config(r)), 0, 0};
  ck.seed = r.u64("seed");
  ck.epoch = r.u32("epoch");
  const std::size_t count = r.u32("parameter count");
  auto& params = ck.model.params();
  require(count == params.size(), ErrorCategory::format,
          r.source() + ": " + std::to_string(count) + " parameters stored, config declares " +
              std::to_string(params.size()));
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t len = r.u32("name length");
    const auto name = r.bytes(len, "name");
    auto& p = params[k];
    require(name == p.name, ErrorCategory::format,
            r.source() + ": parameter " + std::to_string(k) + " is '" + name + "', expected '" + p.name + "'");
    const std::size_t rank = r.u32("rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("dimension");
    require(shape == p.value.shape(), ErrorCategory::format,
            r.source() + ": shape of " + name + " is " + shape_string(shape) + ", expected " +
                shape_string(p.value.shape()));
    for (auto& v : p.value.storage()) v = r.f32("parameter value");
    require(p.value.all_finite(), ErrorCategory::format, r.source() + ": non-finite values in " + name);
  }
  require(r.remaining() == 0, ErrorCategory::format, r.source() + ": trailing bytes after parameters");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, std::uint64_t seed,
                            std::uint32_t epoch) {
  io::write_file(path, encode_checkpoint(model, seed, epoch));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path), path.string());
  return decode_checkpoint(r);
}

}  // namespace acnn
