#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "acnn/core/complex_volume.hpp"
#include "acnn/core/fft.hpp"
#include "acnn/sampling/kaiser_bessel.hpp"
#include "acnn/sampling/radial.hpp"

namespace acnn {

/// Non-Cartesian samples of a volume: one trajectory-length vector per slice and coil.
struct RadialData {
  std::size_t n_slices = 0;
  std::size_t n_coils = 0;
  std::size_t n_points = 0;
  std::vector<cfloat> samples;  // slice-major, then coil, then trajectory order

  std::span<cfloat> plane(std::size_t s, std::size_t c) {
    return {samples.data() + (s * n_coils + c) * n_points, n_points};
  }
  std::span<const cfloat> plane(std::size_t s, std::size_t c) const {
    return {samples.data() + (s * n_coils + c) * n_points, n_points};
  }
};

namespace detail {

struct KernelTaps {
  long first = 0;            // first grid index (centred units, before wrap)
  double weight[16] = {};    // separable weights; kernel_width <= 14 supported
  int count = 0;
};

inline KernelTaps kernel_taps(double u, const GriddingConfig& cfg) {
  KernelTaps t;
  const double half = 0.5 * cfg.kernel_width;
  t.first = static_cast<long>(std::ceil(u - half));
  const long last = static_cast<long>(std::floor(u + half));
  t.count = static_cast<int>(last - t.first + 1);
  require(t.count <= 16, ErrorCategory::invalid_argument, "gridding: kernel too wide");
  for (int i = 0; i < t.count; ++i) t.weight[i] = kb_kernel(u - static_cast<double>(t.first + i), cfg);
  return t;
}

inline std::size_t wrap_index(long centred, std::size_t g) {
  const long gl = static_cast<long>(g);
  long idx = (centred + gl / 2) % gl;
  if (idx < 0) idx += gl;
  return static_cast<std::size_t>(idx);
}

inline void check_coordinates(const RadialTrajectory& traj) {
  for (const auto& k : traj.coords)
    require(k.kx >= -0.5 && k.kx < 0.5 && k.ky >= -0.5 && k.ky < 0.5, ErrorCategory::invalid_argument,
            "trajectory coordinate outside [-0.5, 0.5)");
}

// Deapodization factor for centred pixel offset p on an n-pixel axis.
inline std::vector<double> deapodization(std::size_t n, std::size_t g, const GriddingConfig& cfg) {
  std::vector<double> d(n);
  const long half = static_cast<long>(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = static_cast<double>(static_cast<long>(i) - half);
    d[i] = kb_kernel_transform(p / static_cast<double>(g), cfg);
  }
  return d;
}

}  // namespace detail

/// Type-2 NUFFT of one square n x n image plane onto a trajectory.
///
/// Matches the orthonormal centred DFT: at on-grid coordinates the result
/// equals fft2c of the image.
inline std::vector<cdouble> nufft_degrid_plane(std::span<const cdouble> image, std::size_t n,
                                               const RadialTrajectory& traj, const GriddingConfig& cfg) {
  cfg.validate();
  require(image.size() == n * n, ErrorCategory::shape_mismatch, "nufft_degrid: image must be square");
  detail::check_coordinates(traj);
  const std::size_t g = cfg.grid_size(n);
  const auto apod = detail::deapodization(n, g, cfg);

  std::vector<cdouble> grid(g * g, cdouble(0.0, 0.0));
  const std::size_t off = g / 2 - n / 2;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      grid[(r + off) * g + (c + off)] = image[r * n + c] / (apod[r] * apod[c]);
  centered_dft2(grid, g, g, false);
  const double scale = 1.0 / static_cast<double>(n);

  std::vector<cdouble> out(traj.size());
  const double gd = static_cast<double>(g);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto tx = detail::kernel_taps(traj.coords[i].kx * gd, cfg);
    const auto ty = detail::kernel_taps(traj.coords[i].ky * gd, cfg);
    cdouble acc(0.0, 0.0);
    for (int a = 0; a < ty.count; ++a) {
      const std::size_t row = detail::wrap_index(ty.first + a, g);
      cdouble line(0.0, 0.0);
      for (int b = 0; b < tx.count; ++b)
        line += tx.weight[b] * grid[row * g + detail::wrap_index(tx.first + b, g)];
      acc += ty.weight[a] * line;
    }
    out[i] = acc * scale;
  }
  return out;
}

/// Simulated radial acquisition of every slice and coil of an image volume.
inline RadialData nufft_degrid(const ComplexVolume& img, const RadialTrajectory& traj,
                               const GriddingConfig& cfg) {
  require(img.domain() == Domain::image, ErrorCategory::invalid_argument,
          "nufft_degrid expects an image-domain volume");
  require(img.height() == img.width(), ErrorCategory::shape_mismatch, "nufft_degrid: image must be square");
  RadialData out{img.n_slices(), img.n_coils(), traj.size(), {}};
  out.samples.resize(img.n_slices() * img.n_coils() * traj.size());
  std::vector<cdouble> buf(img.plane_size());
  for (std::size_t s = 0; s < img.n_slices(); ++s)
    for (std::size_t c = 0; c < img.n_coils(); ++c) {
      auto p = img.plane(s, c);
      std::copy(p.begin(), p.end(), buf.begin());
      auto k = nufft_degrid_plane(buf, img.width(), traj, cfg);
      auto dst = out.plane(s, c);
      for (std::size_t i = 0; i < k.size(); ++i) dst[i] = cfloat(k[i]);
    }
  return out;
}

/// Ramp density compensation in Cartesian-cell units for a `target`-pixel grid.
///
/// A sample at radius |k| stands for an annulus sector of area
/// pi |k| / (n_readout * n_spokes). Every spoke hits DC, so each DC sample
/// takes its share of the central Voronoi disc: a quarter of the weight of
/// the smallest nonzero radius.
inline std::vector<double> radial_density_weights(const RadialTrajectory& traj, std::size_t target) {
  const double n2 = static_cast<double>(target) * static_cast<double>(target);
  const double per_radius =
      n2 * std::numbers::pi / (static_cast<double>(traj.n_readout) * static_cast<double>(traj.n_spokes));
  const double r_min = 1.0 / static_cast<double>(traj.n_readout);
  std::vector<double> w(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double r = std::hypot(traj.coords[i].kx, traj.coords[i].ky);
    w[i] = r < 0.5 * r_min ? 0.25 * per_radius * r_min : per_radius * r;
  }
  return w;
}

/// Density-compensated Kaiser-Bessel regridding onto a target_size Cartesian k-space grid.
inline std::vector<cdouble> grid_radial_plane(std::span<const cdouble> samples, const RadialTrajectory& traj,
                                              const GriddingConfig& cfg) {
  cfg.validate();
  require(samples.size() == traj.size(), ErrorCategory::shape_mismatch,
          "grid_radial: " + std::to_string(samples.size()) + " samples for a trajectory of " +
              std::to_string(traj.size()));
  detail::check_coordinates(traj);
  const std::size_t n = cfg.target_size;
  const std::size_t g = cfg.grid_size(n);
  const auto dcf = radial_density_weights(traj, n);

  std::vector<cdouble> grid(g * g, cdouble(0.0, 0.0));
  const double gd = static_cast<double>(g);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const cdouble v = samples[i] * dcf[i];
    if (v == cdouble(0.0, 0.0)) continue;
    const auto tx = detail::kernel_taps(traj.coords[i].kx * gd, cfg);
    const auto ty = detail::kernel_taps(traj.coords[i].ky * gd, cfg);
    for (int a = 0; a < ty.count; ++a) {
      const std::size_t row = detail::wrap_index(ty.first + a, g);
      const cdouble rv = v * ty.weight[a];
      for (int b = 0; b < tx.count; ++b) grid[row * g + detail::wrap_index(tx.first + b, g)] += rv * tx.weight[b];
    }
  }
  centered_dft2(grid, g, g, true);

  const auto apod = detail::deapodization(n, g, cfg);
  const std::size_t off = g / 2 - n / 2;
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<cdouble> plane(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      plane[r * n + c] = grid[(r + off) * g + (c + off)] * (scale / (apod[r] * apod[c]));
  fft2c_plane(plane, n, n, false);
  return plane;
}

/// Regrid every slice and coil of radial data to a k-space volume.
inline ComplexVolume grid_radial(const RadialData& data, const RadialTrajectory& traj, const GriddingConfig& cfg) {
  require(data.n_points == traj.size(), ErrorCategory::shape_mismatch,
          "grid_radial: sample count does not match trajectory");
  const std::size_t n = cfg.target_size;
  ComplexVolume out(data.n_slices, data.n_coils, n, n, Domain::kspace);
  std::vector<cdouble> buf(data.n_points);
  for (std::size_t s = 0; s < data.n_slices; ++s)
    for (std::size_t c = 0; c < data.n_coils; ++c) {
      auto p = data.plane(s, c);
      std::copy(p.begin(), p.end(), buf.begin());
      auto k = grid_radial_plane(buf, traj, cfg);
      auto dst = out.plane(s, c);
      for (std::size_t i = 0; i < k.size(); ++i) dst[i] = cfloat(k[i]);
    }
  return out;
}

}  // namespace acnn
