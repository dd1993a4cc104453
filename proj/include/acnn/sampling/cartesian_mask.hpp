#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "acnn/core/error.hpp"
#include "acnn/core/random.hpp"

namespace acnn {

/// Binary k-space sampling mask made of full phase-encode columns.
struct CartesianMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0/1
  std::uint64_t seed = 0;
  double acceleration = 1.0;

  bool sampled(std::size_t row, std::size_t col) const { return bits[row * width + col] != 0; }

  /// Columns whose first row is sampled (the mask is column-constant).
  std::vector<std::size_t> sampled_columns() const {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < width; ++c)
      if (height > 0 && bits[c]) cols.push_back(c);
    return cols;
  }

  std::size_t count_sampled() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }

  static CartesianMask filled(std::size_t h, std::size_t w, std::uint8_t value) {
    CartesianMask m;
    m.height = h;
    m.width = w;
    m.bits.assign(h * w, value);
    return m;
  }
};

/// Random Gaussian-density line mask.
///
/// Draws floor(W / R) distinct columns without replacement, each draw
/// proportional to a Gaussian centred on the DC column (sigma = W / 6).
/// The DC column is always included.
inline CartesianMask make_cartesian_mask(std::size_t height, std::size_t width, double acceleration,
                                         std::uint64_t seed) {
  require(height >= 1 && width >= 1, ErrorCategory::invalid_argument, "mask: empty dimensions");
  require(acceleration >= 1.0, ErrorCategory::invalid_argument,
          "mask: acceleration must be >= 1");
  require(acceleration <= static_cast<double>(width), ErrorCategory::invalid_argument,
          "mask: acceleration exceeds width");

  const auto n_lines = static_cast<std::size_t>(std::floor(static_cast<double>(width) / acceleration));
  const std::size_t dc = width / 2;
  const double sigma = static_cast<double>(width) / 6.0;

  std::vector<double> weight(width);
  for (std::size_t c = 0; c < width; ++c) {
    const double d = (static_cast<double>(c) - static_cast<double>(dc)) / sigma;
    weight[c] = std::exp(-0.5 * d * d);
  }

  std::vector<std::uint8_t> chosen(width, 0);
  chosen[dc] = 1;
  weight[dc] = 0.0;
  Rng rng(seed);
  for (std::size_t picked = 1; picked < n_lines; ++picked) {
    double total = 0.0;
    for (double w : weight) total += w;
    double target = rng.uniform() * total;
    std::size_t pick = width;
    for (std::size_t c = 0; c < width; ++c) {
      if (weight[c] <= 0.0) continue;
      pick = c;
      if (target < weight[c]) break;
      target -= weight[c];
    }
    chosen[pick] = 1;
    weight[pick] = 0.0;
  }

  CartesianMask m = CartesianMask::filled(height, width, 0);
  m.seed = seed;
  m.acceleration = acceleration;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) m.bits[r * width + c] = chosen[c];
  return m;
}

}  // namespace acnn
