#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "acnn/core/error.hpp"

namespace acnn {

/// Kaiser-Bessel gridding parameters. Widths are in oversampled-grid cells.
struct GriddingConfig {
  double kernel_width = 4.0;
  double oversampling = 2.0;
  double beta = 0.0;  // <= 0 selects the minimal-error value for (width, oversampling)
  std::size_t target_size = 256;

  /// Shape parameter minimizing aliasing for a given width and oversampling ratio.
  static double minimal_error_beta(double width, double oversampling) {
    const double a = width / oversampling * (oversampling - 0.5);
    return std::numbers::pi * std::sqrt(a * a - 0.8);
  }

  double resolved_beta() const {
    return beta > 0.0 ? beta : minimal_error_beta(kernel_width, oversampling);
  }

  std::size_t grid_size(std::size_t n) const {
    auto g = static_cast<std::size_t>(std::ceil(oversampling * static_cast<double>(n)));
    return g + (g % 2);
  }

  void validate() const {
    require(kernel_width >= 2.0, ErrorCategory::invalid_argument, "gridding: kernel_width must be >= 2");
    require(oversampling > 1.0, ErrorCategory::invalid_argument, "gridding: oversampling must be > 1");
    require(target_size >= 1, ErrorCategory::invalid_argument, "gridding: target_size must be >= 1");
    require(std::isfinite(resolved_beta()), ErrorCategory::invalid_argument,
            "gridding: kernel too narrow for the minimal-error beta");
  }
};

/// w(u) = I0(beta sqrt(1 - (2u/W)^2)) / I0(beta) on |u| <= W/2, zero outside.
inline double kb_kernel(double u, const GriddingConfig& cfg) {
  const double half = 0.5 * cfg.kernel_width;
  if (std::abs(u) > half) return 0.0;
  const double beta = cfg.resolved_beta();
  const double t = 2.0 * u / cfg.kernel_width;
  const double arg = beta * std::sqrt(std::max(0.0, 1.0 - t * t));
  return std::cyl_bessel_i(0.0, arg) / std::cyl_bessel_i(0.0, beta);
}

/// Continuous Fourier transform of kb_kernel at frequency nu (cycles per grid cell).
inline double kb_kernel_transform(double nu, const GriddingConfig& cfg) {
  const double beta = cfg.resolved_beta();
  const double w = cfg.kernel_width;
  const double x = std::numbers::pi * w * nu;
  const double d = beta * beta - x * x;
  double shape;
  if (d > 1e-12) {
    const double r = std::sqrt(d);
    shape = std::sinh(r) / r;
  } else if (d < -1e-12) {
    const double r = std::sqrt(-d);
    shape = std::sin(r) / r;
  } else {
    shape = 1.0;
  }
  return w * shape / std::cyl_bessel_i(0.0, beta);
}

}  // namespace acnn
