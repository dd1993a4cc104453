#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "acnn/core/error.hpp"

namespace acnn {

struct KPoint {
  double kx = 0.0;  // cycles per pixel along columns, in [-0.5, 0.5)
  double ky = 0.0;  // cycles per pixel along rows
};

/// Uniform-angle radial trajectory; spoke-major, readout-minor.
struct RadialTrajectory {
  std::size_t n_spokes = 0;
  std::size_t n_readout = 0;
  std::vector<KPoint> coords;

  std::size_t size() const noexcept { return coords.size(); }
  const KPoint& at(std::size_t spoke, std::size_t sample) const {
    return coords[spoke * n_readout + sample];
  }
};

/// Spoke k has angle k*pi/n_spokes; readout j sits at radius (j - n/2)/n.
inline RadialTrajectory make_radial_trajectory(std::size_t n_spokes, std::size_t n_readout) {
  require(n_spokes >= 1, ErrorCategory::invalid_argument, "radial: need at least one spoke");
  require(n_readout >= 2, ErrorCategory::invalid_argument, "radial: need at least two readout samples");
  RadialTrajectory t;
  t.n_spokes = n_spokes;
  t.n_readout = n_readout;
  t.coords.reserve(n_spokes * n_readout);
  const double half = static_cast<double>(n_readout / 2);
  for (std::size_t s = 0; s < n_spokes; ++s) {
    const double angle = std::numbers::pi * static_cast<double>(s) / static_cast<double>(n_spokes);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t j = 0; j < n_readout; ++j) {
      const double r = (static_cast<double>(j) - half) / static_cast<double>(n_readout);
      t.coords.push_back({r * ca, r * sa});
    }
  }
  return t;
}

}  // namespace acnn
