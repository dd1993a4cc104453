#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "acnn/core/fft.hpp"
#include "acnn/core/kspace.hpp"
#include "acnn/sampling/cartesian_mask.hpp"
#include "acnn/sampling/nufft.hpp"
#include "acnn/sampling/radial.hpp"

namespace acnn {

enum class SamplingKind : unsigned char { cartesian = 0, radial = 1 };

inline SamplingKind parse_sampling_kind(std::string_view s) {
  if (s == "cartesian") return SamplingKind::cartesian;
  if (s == "radial") return SamplingKind::radial;
  fail(ErrorCategory::invalid_argument, "unknown sampling '" + std::string(s) + "' (cartesian|radial)");
}

/// Undersampling operator: a Cartesian line mask, or a radial trajectory
/// followed by density-compensated regridding back to the Cartesian grid.
struct Sampling {
  SamplingKind kind = SamplingKind::cartesian;
  CartesianMask mask;
  RadialTrajectory trajectory;
  GriddingConfig gridding;

  static Sampling cartesian(CartesianMask m) {
    Sampling s;
    s.kind = SamplingKind::cartesian;
    s.mask = std::move(m);
    return s;
  }
  static Sampling radial(RadialTrajectory t, GriddingConfig g) {
    Sampling s;
    s.kind = SamplingKind::radial;
    s.trajectory = std::move(t);
    s.gridding = g;
    return s;
  }
};

/// Network-input k-space for a fully sampled k-space volume.
inline ComplexVolume undersample(const ComplexVolume& full, const Sampling& sampling) {
  require(full.domain() == Domain::kspace, ErrorCategory::invalid_argument, "undersample expects k-space input");
  if (sampling.kind == SamplingKind::cartesian) return apply_mask(full, sampling.mask);
  require(full.height() == full.width(), ErrorCategory::shape_mismatch, "radial sampling needs square planes");
  GriddingConfig g = sampling.gridding;
  g.target_size = full.width();
  const auto samples = nufft_degrid(ifft2c(full), sampling.trajectory, g);
  return grid_radial(samples, sampling.trajectory, g);
}

/// Power-of-two factor bringing the zero-filled RSS maximum into (0.5, 1].
/// Powers of two keep the scaling exact in floating point.
inline double normalization_scale(const ComplexVolume& undersampled) {
  double peak = 0.0;
  for (const auto& im : rss_combine_all(ifft2c(undersampled)))
    for (double v : im.pixels) peak = std::max(peak, v);
  if (peak <= 0.0 || !std::isfinite(peak)) return 1.0;
  return std::ldexp(1.0, -static_cast<int>(std::ceil(std::log2(peak))));
}

inline ComplexVolume scaled(ComplexVolume v, double factor) {
  const float f = static_cast<float>(factor);
  for (auto& z : v.data()) z *= f;
  return v;
}

/// Zero-pads (image domain) or crops each plane around its centre to h x w.
inline ComplexVolume center_resize(const ComplexVolume& v, std::size_t h, std::size_t w) {
  ComplexVolume out(v.n_slices(), v.n_coils(), h, w, v.domain());
  const long dr = static_cast<long>(h / 2) - static_cast<long>(v.height() / 2);
  const long dc = static_cast<long>(w / 2) - static_cast<long>(v.width() / 2);
  for (std::size_t s = 0; s < v.n_slices(); ++s)
    for (std::size_t c = 0; c < v.n_coils(); ++c)
      for (std::size_t r = 0; r < v.height(); ++r)
        for (std::size_t q = 0; q < v.width(); ++q) {
          const long rr = static_cast<long>(r) + dr, qq = static_cast<long>(q) + dc;
          if (rr >= 0 && qq >= 0 && rr < static_cast<long>(h) && qq < static_cast<long>(w))
            out.at(s, c, static_cast<std::size_t>(rr), static_cast<std::size_t>(qq)) = v.at(s, c, r, q);
        }
  return out;
}

/// Zero-pads a k-space volume's images to h x w (k-space in, k-space out).
inline ComplexVolume zero_pad_kspace_images(const ComplexVolume& k, std::size_t h, std::size_t w) {
  require(h >= k.height() && w >= k.width(), ErrorCategory::invalid_argument,
          "zero padding target smaller than the volume");
  return fft2c(center_resize(ifft2c(k), h, w));
}

}  // namespace acnn
