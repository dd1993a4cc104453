#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// the library's transforms, metrics or statistics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "acnn/core/complex_volume.hpp"

namespace oracle {

using cd = std::complex<double>;

/// Centred orthonormal 2D DFT by direct summation, DC at (h/2, w/2).
inline std::vector<cd> centred_dft(const std::vector<cd>& x, std::size_t h, std::size_t w, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  const long ch = static_cast<long>(h / 2), cw = static_cast<long>(w / 2);
  std::vector<cd> out(h * w);
  for (std::size_t kr = 0; kr < h; ++kr)
    for (std::size_t kc = 0; kc < w; ++kc) {
      cd acc = 0.0;
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          const double ph = 2.0 * std::numbers::pi *
                            (static_cast<double>((static_cast<long>(kr) - ch) * (static_cast<long>(r) - ch)) / h +
                             static_cast<double>((static_cast<long>(kc) - cw) * (static_cast<long>(c) - cw)) / w);
          acc += x[r * w + c] * std::polar(1.0, sign * ph);
        }
      out[kr * w + kc] = acc / std::sqrt(static_cast<double>(h * w));
    }
  return out;
}

/// Non-uniform forward DFT of an n x n image at (kx, ky) in cycles per pixel,
/// origin at pixel n/2, scaled by 1/n so on-grid points equal the orthonormal DFT:
/// F(k) = (1/n) sum_x f(x) exp(-2 pi i k . (x - n/2)).
inline cd nonuniform_dft(const std::vector<cd>& img, std::size_t n, double kx, double ky) {
  cd acc = 0.0;
  const double half = static_cast<double>(n / 2);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double ph = -2.0 * std::numbers::pi * (kx * (static_cast<double>(c) - half) + ky * (static_cast<double>(r) - half));
      acc += img[r * n + c] * std::polar(1.0, ph);
    }
  return acc / static_cast<double>(n);
}

inline acnn::ComplexVolume random_volume(std::size_t s, std::size_t c, std::size_t h, std::size_t w,
                                         acnn::Domain d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  acnn::ComplexVolume v(s, c, h, w, d);
  for (auto& z : v.data()) z = {n(gen), n(gen)};
  return v;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

/// Two-sided exact rank-sum p-value by walking every bitmask of the pooled
/// sample with popcount |a| and recomputing midranks from scratch.
inline double ranksum_by_bitmask(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n = all.size(), n1 = a.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (all[j] < all[i]) ++less;
      if (all[j] == all[i]) ++equal;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  const double mean = static_cast<double>(n1) * static_cast<double>(n + 1) / 2.0;
  double w = 0;
  for (std::size_t i = 0; i < n1; ++i) w += rank[i];
  const double obs = std::abs(w - mean);
  std::size_t total = 0, extreme = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += rank[i];
    ++total;
    if (std::abs(s - mean) >= obs - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Image-quality formulas evaluated single-pass in long double from raw sums
/// (the library uses two-pass double moments). Global statistics,
/// population moments, c = k * max(v).
struct Moments {
  long double mx = 0, my = 0, vx = 0, vy = 0, cxy = 0, sq_diff = 0, sq_ref = 0, peak = 0;
};

inline Moments moments(const std::vector<double>& x, const std::vector<double>& y) {
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sd = 0, sr = 0, peak = y[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double a = x[i], b = y[i];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
    sd += (a - b) * (a - b);
    sr += b * b;
    peak = std::max(peak, b);
  }
  const long double n = static_cast<long double>(x.size());
  Moments m;
  m.mx = sx / n;
  m.my = sy / n;
  m.vx = sxx / n - m.mx * m.mx;
  m.vy = syy / n - m.my * m.my;
  m.cxy = sxy / n - m.mx * m.my;
  m.sq_diff = sd;
  m.sq_ref = sr;
  m.peak = peak;
  return m;
}

inline double ssim(const std::vector<double>& vhat, const std::vector<double>& v) {
  const auto m = moments(vhat, v);
  const long double c1 = 0.01L * m.peak, c2 = 0.03L * m.peak;
  return static_cast<double>((2 * m.mx * m.my + c1) * (2 * m.cxy + c2) /
                             ((m.mx * m.mx + m.my * m.my + c1) * (m.vx + m.vy + c2)));
}

inline double psnr(const std::vector<double>& vhat, const std::vector<double>& v) {
  const auto m = moments(vhat, v);
  return static_cast<double>(10.0L * std::log10(m.peak * m.peak / (m.sq_diff / static_cast<long double>(v.size()))));
}

inline double nmse(const std::vector<double>& vhat, const std::vector<double>& v) {
  const auto m = moments(vhat, v);
  return static_cast<double>(m.sq_diff / m.sq_ref);
}

}  // namespace oracle
