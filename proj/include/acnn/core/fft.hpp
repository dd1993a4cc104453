#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "acnn/core/complex_volume.hpp"

namespace acnn {

using cdouble = std::complex<double>;

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

// One centered 1D transform over `n` elements spaced `stride` apart:
// out = fftshift(dft(ifftshift(in))), unscaled.
inline void centered_dft_1d(cdouble* data, std::size_t n, std::size_t stride, bool inverse,
                            std::vector<cdouble>& in, std::vector<cdouble>& out) {
  in.resize(n);
  out.resize(n);
  const std::size_t half_floor = n / 2;
  const std::size_t half_ceil = n - half_floor;
  for (std::size_t j = 0; j < n; ++j) in[j] = data[((j + half_floor) % n) * stride];
  if (inverse)
    fft_engine().inv(out, in);
  else
    fft_engine().fwd(out, in);
  for (std::size_t k = 0; k < n; ++k) data[k * stride] = out[(k + half_ceil) % n];
}

}  // namespace detail

/// Unscaled centered 2D DFT of a row-major h x w plane, in place.
/// DC lives at (h/2, w/2); the exponent sign is negative unless `inverse`.
inline void centered_dft2(std::span<cdouble> plane, std::size_t h, std::size_t w, bool inverse) {
  std::vector<cdouble> in, out;
  for (std::size_t r = 0; r < h; ++r) detail::centered_dft_1d(plane.data() + r * w, w, 1, inverse, in, out);
  for (std::size_t c = 0; c < w; ++c) detail::centered_dft_1d(plane.data() + c, h, w, inverse, in, out);
}

/// Orthonormal centered 2D DFT of one plane, in place.
inline void fft2c_plane(std::span<cdouble> plane, std::size_t h, std::size_t w, bool inverse = false) {
  centered_dft2(plane, h, w, inverse);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (auto& z : plane) z *= scale;
}

namespace detail {

inline ComplexVolume transform_volume(const ComplexVolume& x, bool inverse) {
  require(x.height() >= 1 && x.width() >= 1, ErrorCategory::invalid_argument,
          "fft2c: empty plane");
  require_finite(x, inverse ? "ifft2c" : "fft2c");
  ComplexVolume out(x.n_slices(), x.n_coils(), x.height(), x.width(),
                    inverse ? Domain::image : Domain::kspace);
  std::vector<cdouble> buf(x.plane_size());
  for (std::size_t s = 0; s < x.n_slices(); ++s)
    for (std::size_t c = 0; c < x.n_coils(); ++c) {
      auto src = x.plane(s, c);
      std::copy(src.begin(), src.end(), buf.begin());
      fft2c_plane(buf, x.height(), x.width(), inverse);
      auto dst = out.plane(s, c);
      for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = cfloat(buf[i]);
    }
  return out;
}

}  // namespace detail

/// Image -> k-space, per slice and coil. Computed in double, stored as float.
inline ComplexVolume fft2c(const ComplexVolume& image) {
  require(image.domain() == Domain::image, ErrorCategory::invalid_argument,
          "fft2c expects an image-domain volume");
  return detail::transform_volume(image, false);
}

/// k-space -> image, inverse of fft2c.
inline ComplexVolume ifft2c(const ComplexVolume& kspace) {
  require(kspace.domain() == Domain::kspace, ErrorCategory::invalid_argument,
          "ifft2c expects a k-space volume");
  return detail::transform_volume(kspace, true);
}

}  // namespace acnn
