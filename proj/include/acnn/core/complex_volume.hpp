#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acnn/core/error.hpp"

namespace acnn {

using cfloat = std::complex<float>;

enum class Domain : unsigned char { kspace = 0, image = 1 };

inline const char* domain_name(Domain d) { return d == Domain::kspace ? "k-space" : "image"; }

/// Stack of 2D complex slices with a coil dimension.
///
/// Samples are ordered slice-major, then coil, then row, then column.
/// std::complex<float> is layout-compatible with interleaved (re, im) pairs,
/// which is exactly the on-disk KSPV payload.
class ComplexVolume {
 public:
  ComplexVolume() = default;

  ComplexVolume(std::size_t n_slices, std::size_t n_coils, std::size_t height, std::size_t width,
                Domain domain)
      : n_slices_(n_slices),
        n_coils_(n_coils),
        height_(height),
        width_(width),
        domain_(domain),
        data_(n_slices * n_coils * height * width) {}

  std::size_t n_slices() const noexcept { return n_slices_; }
  std::size_t n_coils() const noexcept { return n_coils_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  Domain domain() const noexcept { return domain_; }
  void set_domain(Domain d) noexcept { domain_ = d; }

  cfloat& at(std::size_t slice, std::size_t coil, std::size_t row, std::size_t col) {
    return data_[((slice * n_coils_ + coil) * height_ + row) * width_ + col];
  }
  const cfloat& at(std::size_t slice, std::size_t coil, std::size_t row, std::size_t col) const {
    return data_[((slice * n_coils_ + coil) * height_ + row) * width_ + col];
  }

  std::span<cfloat> plane(std::size_t slice, std::size_t coil) {
    return {data_.data() + (slice * n_coils_ + coil) * plane_size(), plane_size()};
  }
  std::span<const cfloat> plane(std::size_t slice, std::size_t coil) const {
    return {data_.data() + (slice * n_coils_ + coil) * plane_size(), plane_size()};
  }

  std::span<cfloat> data() noexcept { return data_; }
  std::span<const cfloat> data() const noexcept { return data_; }

  bool same_shape(const ComplexVolume& o) const noexcept {
    return n_slices_ == o.n_slices_ && n_coils_ == o.n_coils_ && height_ == o.height_ &&
           width_ == o.width_;
  }

  bool all_finite() const noexcept {
    for (const auto& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  /// Copy of one slice as a single-slice volume.
  ComplexVolume slice(std::size_t index) const {
    require(index < n_slices_, ErrorCategory::invalid_argument,
            "slice index " + std::to_string(index) + " out of range");
    ComplexVolume out(1, n_coils_, height_, width_, domain_);
    const std::size_t stride = n_coils_ * plane_size();
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(index * stride), stride,
                out.data_.begin());
    return out;
  }

  std::string shape_string() const {
    return std::to_string(n_slices_) + "x" + std::to_string(n_coils_) + "x" +
           std::to_string(height_) + "x" + std::to_string(width_);
  }

  friend bool operator==(const ComplexVolume& a, const ComplexVolume& b) {
    return a.same_shape(b) && a.domain_ == b.domain_ && a.data_ == b.data_;
  }

 private:
  std::size_t n_slices_ = 0;
  std::size_t n_coils_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  Domain domain_ = Domain::kspace;
  std::vector<cfloat> data_;
};

inline void require_finite(const ComplexVolume& v, const char* where) {
  require(v.all_finite(), ErrorCategory::numeric,
          std::string(where) + ": volume contains non-finite samples");
}

/// Real-valued 2D image, row-major.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double operator()(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::size_t size() const noexcept { return pixels.size(); }
};

}  // namespace acnn
