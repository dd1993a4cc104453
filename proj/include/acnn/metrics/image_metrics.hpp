#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "acnn/core/complex_volume.hpp"

namespace acnn {

struct SsimOptions {
  double k1 = 0.01;
  double k2 = 0.03;
  bool windowed = false;    // sliding square windows, averaged; not the reference definition
  std::size_t window = 7;   // side length when windowed
};

namespace detail {

inline void check_pair(const Image& a, const Image& b, const char* what) {
  require(a.height == b.height && a.width == b.width, ErrorCategory::shape_mismatch,
          std::string(what) + ": image shapes differ (" + std::to_string(a.height) + "x" + std::to_string(a.width) +
              " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
  require(!a.pixels.empty(), ErrorCategory::invalid_argument, std::string(what) + ": empty image");
}

// One SSIM term from first and second moments; stabilizers are c = k*L (not squared).
inline double ssim_from_moments(double mx, double my, double vx, double vy, double cxy, double c1, double c2) {
  return (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

inline double ssim_region(const Image& x, const Image& y, std::size_t r0, std::size_t c0, std::size_t h,
                          std::size_t w, double c1, double c2) {
  double mx = 0.0, my = 0.0;
  for (std::size_t r = r0; r < r0 + h; ++r)
    for (std::size_t c = c0; c < c0 + w; ++c) {
      mx += x(r, c);
      my += y(r, c);
    }
  const double n = static_cast<double>(h * w);
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t r = r0; r < r0 + h; ++r)
    for (std::size_t c = c0; c < c0 + w; ++c) {
      const double dx = x(r, c) - mx, dy = y(r, c) - my;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  return ssim_from_moments(mx, my, vx / n, vy / n, cxy / n, c1, c2);
}

}  // namespace detail

inline double image_max(const Image& v) { return *std::max_element(v.pixels.begin(), v.pixels.end()); }

/// Structural similarity of vhat against reference v with global image
/// statistics, population moments, c1 = k1*L, c2 = k2*L and L = max(v).
inline double ssim(const Image& vhat, const Image& v, const SsimOptions& opt = {}) {
  detail::check_pair(vhat, v, "ssim");
  const double L = image_max(v);
  require(L > 0.0, ErrorCategory::numeric, "ssim: degenerate dynamic range L = max(v) <= 0");
  const double c1 = opt.k1 * L, c2 = opt.k2 * L;
  if (!opt.windowed) return detail::ssim_region(vhat, v, 0, 0, v.height, v.width, c1, c2);
  const std::size_t k = std::min({opt.window, v.height, v.width});
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + k <= v.height; ++r)
    for (std::size_t c = 0; c + k <= v.width; ++c, ++count) sum += detail::ssim_region(vhat, v, r, c, k, k, c1, c2);
  return sum / static_cast<double>(count);
}

inline double mse(const Image& a, const Image& b) {
  detail::check_pair(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// 10 log10(max(v)^2 / MSE); +infinity for identical images.
inline double psnr(const Image& vhat, const Image& v) {
  detail::check_pair(vhat, v, "psnr");
  const double peak = image_max(v);
  require(peak > 0.0, ErrorCategory::numeric, "psnr: max(v) <= 0");
  const double m = mse(vhat, v);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

/// |vhat - v|^2 / |v|^2.
inline double nmse(const Image& vhat, const Image& v) {
  detail::check_pair(vhat, v, "nmse");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = vhat.pixels[i] - v.pixels[i];
    num += d * d;
    den += v.pixels[i] * v.pixels[i];
  }
  require(den > 0.0, ErrorCategory::numeric, "nmse: zero reference image");
  return num / den;
}

}  // namespace acnn
