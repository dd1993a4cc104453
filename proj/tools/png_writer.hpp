#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "acnn/core/complex_volume.hpp"

namespace acnn::cli {

/// Writes an 8-bit grayscale PNG; `pixels` is row-major, height * width bytes.
void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    const std::vector<std::uint8_t>& pixels);

/// Linear map of [0, peak] to [0, 255] with clipping; peak <= 0 gives black.
std::vector<std::uint8_t> to_gray(const Image& im, double peak);

/// Values in (0, 1) to bytes in [1, 254]: an open-interval map keeps every
/// sigmoid output off the saturated end codes.
std::vector<std::uint8_t> unit_interval_to_gray(const std::vector<float>& values);

}  // namespace acnn::cli
