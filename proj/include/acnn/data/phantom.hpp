#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "acnn/core/complex_volume.hpp"
#include "acnn/core/random.hpp"

namespace acnn {

/// Synthetic multi-coil phantom parameters.
///
/// Adjacent slices stay correlated above 0.9 for slice_drift <= 0.04
/// (checked by the test suite at the default geometry).
struct PhantomSpec {
  std::size_t n_slices = 8;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t n_coils = 2;
  std::size_t n_ellipses = 6;
  std::uint64_t seed = 0;
  double slice_drift = 0.02;  // per-slice change of centre/axes/angle, in half-FOV units
  double intensity_min = 0.2;
  double intensity_max = 1.0;

  void validate() const {
    require(height == width, ErrorCategory::invalid_argument, "phantom: height must equal width");
    require(height >= 2 && n_slices >= 1 && n_coils >= 1, ErrorCategory::invalid_argument,
            "phantom: sizes must be positive");
    require(n_ellipses >= 1, ErrorCategory::invalid_argument, "phantom: need at least one ellipse");
    require(slice_drift >= 0.0, ErrorCategory::invalid_argument, "phantom: slice_drift must be >= 0");
    require(intensity_min >= 0.0 && intensity_max >= intensity_min, ErrorCategory::invalid_argument,
            "phantom: invalid intensity range");
  }
};

namespace detail {

struct Ellipse {
  double cx, cy, a, b, angle, intensity;
  double dcx, dcy, da, db, dangle;  // unit drift directions
};

// Unit-RSS Gaussian profiles centred on the border, one per coil.
inline std::vector<std::vector<std::complex<double>>> coil_sensitivities(std::size_t n_coils, std::size_t n) {
  std::vector<std::vector<std::complex<double>>> s(n_coils, std::vector<std::complex<double>>(n * n));
  if (n_coils == 1) {
    for (auto& v : s[0]) v = 1.0;
    return s;
  }
  const double sigma = 0.9;
  const double half = static_cast<double>(n) / 2.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double y = (static_cast<double>(r) - half) / half;
      const double x = (static_cast<double>(c) - half) / half;
      double norm = 0.0;
      std::vector<double> g(n_coils);
      for (std::size_t k = 0; k < n_coils; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_coils);
        const double dx = x - std::cos(theta), dy = y - std::sin(theta);
        g[k] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        norm += g[k] * g[k];
      }
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < n_coils; ++k) {
        const double phase = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_coils);
        s[k][r * n + c] = std::polar(g[k] / norm, phase);
      }
    }
  return s;
}

}  // namespace detail

/// Magnitude of one slice of the phantom (before phase and coil weighting).
inline std::vector<double> phantom_magnitude(const std::vector<detail::Ellipse>& ellipses, double z, double drift,
                                             std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  const double half = static_cast<double>(n) / 2.0;
  for (const auto& e : ellipses) {
    const double cx = e.cx + drift * z * e.dcx, cy = e.cy + drift * z * e.dcy;
    const double a = e.a * (1.0 + drift * z * e.da), b = e.b * (1.0 + drift * z * e.db);
    const double ang = e.angle + drift * z * e.dangle;
    const double ca = std::cos(ang), sa = std::sin(ang);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double y = (static_cast<double>(r) - half) / half - cy;
        const double x = (static_cast<double>(c) - half) / half - cx;
        const double u = (x * ca + y * sa) / a, v = (-x * sa + y * ca) / b;
        const double rho2 = u * u + v * v;
        if (rho2 <= 1.0) m[r * n + c] += e.intensity * (1.0 - 0.3 * rho2);
      }
  }
  return m;
}

/// Random ellipses plus slowly drifting geometry, quadratic phase and coil weighting.
/// The body spans about 60% of the field of view and |phase| < 1.6 rad, so
/// k-space is oversampled relative to the object and missing lines are
/// predictable from their neighbours.
inline ComplexVolume gen_phantom(const PhantomSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<detail::Ellipse> ellipses;
  for (std::size_t i = 0; i < spec.n_ellipses; ++i) {
    detail::Ellipse e{};
    if (i == 0) {  // body outline
      e.cx = rng.uniform(-0.05, 0.05);
      e.cy = rng.uniform(-0.05, 0.05);
      e.a = rng.uniform(0.5, 0.65);
      e.b = rng.uniform(0.45, 0.6);
    } else {
      e.cx = rng.uniform(-0.3, 0.3);
      e.cy = rng.uniform(-0.3, 0.3);
      e.a = rng.uniform(0.06, 0.25);
      e.b = rng.uniform(0.06, 0.25);
    }
    e.angle = rng.uniform(0.0, std::numbers::pi);
    e.intensity = rng.uniform(spec.intensity_min, spec.intensity_max) / (i == 0 ? 1.0 : 2.0);
    e.dcx = rng.uniform(-1.0, 1.0);
    e.dcy = rng.uniform(-1.0, 1.0);
    e.da = rng.uniform(-1.0, 1.0);
    e.db = rng.uniform(-1.0, 1.0);
    e.dangle = rng.uniform(-1.0, 1.0);
    ellipses.push_back(e);
  }

  const std::size_t n = spec.width;
  const auto sens = detail::coil_sensitivities(spec.n_coils, n);
  ComplexVolume vol(spec.n_slices, spec.n_coils, n, n, Domain::image);
  const double half = static_cast<double>(n) / 2.0;
  const double zc = (static_cast<double>(spec.n_slices) - 1.0) / 2.0;
  for (std::size_t s = 0; s < spec.n_slices; ++s) {
    const auto mag = phantom_magnitude(ellipses, static_cast<double>(s) - zc, spec.slice_drift, n);
    const double p0 = rng.uniform(-0.3, 0.3);
    const double px = rng.uniform(-0.5, 0.5), py = rng.uniform(-0.5, 0.5), pxy = rng.uniform(-0.25, 0.25);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double y = (static_cast<double>(r) - half) / half;
        const double x = (static_cast<double>(c) - half) / half;
        const double phase = p0 + px * x * x + py * y * y + pxy * x * y;
        const std::complex<double> obj = std::polar(mag[r * n + c], phase);
        for (std::size_t k = 0; k < spec.n_coils; ++k) vol.at(s, k, r, c) = cfloat(obj * sens[k][r * n + c]);
      }
  }
  return vol;
}

}  // namespace acnn
