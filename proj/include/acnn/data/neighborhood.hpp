#pragma once

#include <algorithm>
#include <vector>

#include "acnn/core/complex_volume.hpp"

namespace acnn {

/// Slice indices i-s .. i+s with out-of-range entries clamped to the nearest edge slice.
inline std::vector<std::size_t> neighborhood_indices(std::size_t n_slices, std::size_t slice_index, std::size_t s) {
  require(slice_index < n_slices, ErrorCategory::invalid_argument,
          "neighborhood: slice " + std::to_string(slice_index) + " outside volume of " + std::to_string(n_slices));
  std::vector<std::size_t> idx;
  idx.reserve(2 * s + 1);
  const long last = static_cast<long>(n_slices) - 1;
  for (long o = -static_cast<long>(s); o <= static_cast<long>(s); ++o)
    idx.push_back(static_cast<std::size_t>(std::clamp(static_cast<long>(slice_index) + o, 0L, last)));
  return idx;
}

/// The 2s+1 single-slice groups centred on slice_index.
inline std::vector<ComplexVolume> make_neighborhood(const ComplexVolume& vol, std::size_t slice_index, std::size_t s) {
  std::vector<ComplexVolume> out;
  for (auto i : neighborhood_indices(vol.n_slices(), slice_index, s)) out.push_back(vol.slice(i));
  return out;
}

}  // namespace acnn
