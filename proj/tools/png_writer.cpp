#include "png_writer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "acnn/core/error.hpp"

namespace acnn::cli {

void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    const std::vector<std::uint8_t>& pixels) {
  require(pixels.size() == height * width && height > 0 && width > 0, ErrorCategory::invalid_argument,
          "png: pixel buffer does not match " + std::to_string(height) + "x" + std::to_string(width));
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  require(fp != nullptr, ErrorCategory::io, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorCategory::io, "png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCategory::io, "png: cannot create info struct");
  }
  // libpng reports errors by longjmp; nothing with a destructor is created below.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCategory::io, "png: write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + r * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> to_gray(const Image& im, double peak) {
  std::vector<std::uint8_t> out(im.size(), 0);
  if (!(peak > 0.0)) return out;
  for (std::size_t i = 0; i < im.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(im.pixels[i] / peak, 0.0, 1.0) * 255.0));
  return out;
}

std::vector<std::uint8_t> unit_interval_to_gray(const std::vector<float>& values) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(static_cast<double>(values[i]), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(1 + std::min(253.0, std::floor(v * 254.0)));
  }
  return out;
}

}  // namespace acnn::cli
