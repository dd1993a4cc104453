#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "acnn/core/complex_volume.hpp"
#include "acnn/core/tensor.hpp"
#include "acnn/sampling/cartesian_mask.hpp"

namespace acnn {

/// Zero every sample the mask does not keep. Same mask for all slices and coils.
inline ComplexVolume apply_mask(const ComplexVolume& k, const CartesianMask& m) {
  require(m.height == k.height() && m.width == k.width(), ErrorCategory::shape_mismatch,
          "apply_mask: mask " + std::to_string(m.height) + "x" + std::to_string(m.width) +
              " does not match volume plane " + std::to_string(k.height()) + "x" +
              std::to_string(k.width()));
  ComplexVolume out = k;
  for (std::size_t s = 0; s < k.n_slices(); ++s)
    for (std::size_t c = 0; c < k.n_coils(); ++c) {
      auto p = out.plane(s, c);
      for (std::size_t i = 0; i < p.size(); ++i)
        if (!m.bits[i]) p[i] = cfloat(0.0f, 0.0f);
    }
  return out;
}

/// Number of network input channels for 2s+1 slices of n coils.
constexpr std::size_t packed_channel_count(std::size_t s, std::size_t n_coils) {
  return 2 * (2 * s + 1) * n_coils;
}

/// Stack single-slice groups into one (1, 2*groups*n, H, W) tensor.
///
/// Channel order: slice offset (-s .. +s), then coil, then (re, im).
inline ChannelTensor pack_channels(std::span<const ComplexVolume> neighborhood) {
  require(!neighborhood.empty(), ErrorCategory::invalid_argument, "pack_channels: no slice groups");
  const auto& first = neighborhood.front();
  const std::size_t n = first.n_coils(), h = first.height(), w = first.width();
  for (const auto& g : neighborhood) {
    require(g.n_coils() == n, ErrorCategory::shape_mismatch,
            "pack_channels: inconsistent coil counts (" + std::to_string(g.n_coils()) + " vs " +
                std::to_string(n) + ")");
    require(g.height() == h && g.width() == w && g.n_slices() == 1, ErrorCategory::shape_mismatch,
            "pack_channels: slice groups must be single slices of equal size");
  }
  ChannelTensor t = ChannelTensor::nchw(1, 2 * neighborhood.size() * n, h, w);
  std::size_t ch = 0;
  for (const auto& g : neighborhood)
    for (std::size_t c = 0; c < n; ++c, ch += 2) {
      auto p = g.plane(0, c);
      float* re = t.data() + ch * h * w;
      float* im = re + h * w;
      for (std::size_t i = 0; i < p.size(); ++i) {
        re[i] = p[i].real();
        im[i] = p[i].imag();
      }
    }
  return t;
}

/// Inverse of pack_channels for one group: 2n channels of batch item `b`
/// starting at `first_channel` become an n-coil single-slice volume.
inline ComplexVolume unpack_channels(const ChannelTensor& t, Domain domain = Domain::kspace,
                                     std::size_t b = 0, std::size_t first_channel = 0) {
  require(t.rank() == 4, ErrorCategory::shape_mismatch, "unpack_channels: expected rank-4 tensor");
  const std::size_t channels = t.c() - first_channel;
  require(channels % 2 == 0, ErrorCategory::invalid_argument,
          "unpack_channels: odd channel count " + std::to_string(channels));
  const std::size_t n = channels / 2, h = t.h(), w = t.w();
  ComplexVolume out(1, n, h, w, domain);
  for (std::size_t c = 0; c < n; ++c) {
    const float* re = &t.at(b, first_channel + 2 * c, 0, 0);
    const float* im = re + h * w;
    auto p = out.plane(0, c);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = cfloat(re[i], im[i]);
  }
  return out;
}

/// Root-sum-of-squares coil combination of one image slice.
inline Image rss_combine(const ComplexVolume& img, std::size_t slice = 0) {
  require(img.domain() == Domain::image, ErrorCategory::invalid_argument,
          "rss_combine expects an image-domain volume");
  require(slice < img.n_slices(), ErrorCategory::invalid_argument, "rss_combine: bad slice");
  Image out(img.height(), img.width());
  for (std::size_t c = 0; c < img.n_coils(); ++c) {
    auto p = img.plane(slice, c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double re = p[i].real(), im = p[i].imag();
      out.pixels[i] += re * re + im * im;
    }
  }
  for (auto& v : out.pixels) v = std::sqrt(v);
  return out;
}

inline std::vector<Image> rss_combine_all(const ComplexVolume& img) {
  std::vector<Image> out;
  out.reserve(img.n_slices());
  for (std::size_t s = 0; s < img.n_slices(); ++s) out.push_back(rss_combine(img, s));
  return out;
}

}  // namespace acnn
