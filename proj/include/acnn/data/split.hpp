#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "acnn/core/random.hpp"

namespace acnn {

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

/// Section sizes by largest-remainder rounding; ties go to the earlier section.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions) require(f >= 0.0, ErrorCategory::invalid_argument, "split: negative fraction");
  require(std::abs(total - 1.0) < 1e-9, ErrorCategory::invalid_argument, "split: fractions must sum to 1");
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best] + 1e-12) best = i;
    ++sizes[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

/// Deterministic shuffled partition of ids into train / validation / test.
inline DatasetSplit split_dataset(std::vector<std::string> ids, const std::array<double, 3>& fractions,
                                  std::uint64_t seed) {
  require(!ids.empty(), ErrorCategory::invalid_argument, "split: empty corpus");
  const auto sizes = split_sizes(ids.size(), fractions);
  Rng rng(seed);
  rng.shuffle(ids);
  DatasetSplit out;
  out.seed = seed;
  auto it = ids.begin();
  out.train.assign(it, it + static_cast<long>(sizes[0]));
  it += static_cast<long>(sizes[0]);
  out.validation.assign(it, it + static_cast<long>(sizes[1]));
  it += static_cast<long>(sizes[1]);
  out.test.assign(it, ids.end());
  return out;
}

/// Manifest text: one "[section]" header per section, then one id per line.
inline std::string format_manifest(const DatasetSplit& s) {
  std::ostringstream o;
  o << "# seed " << s.seed << "\n";
  auto section = [&](const char* name, const std::vector<std::string>& ids) {
    o << "[" << name << "]\n";
    for (const auto& id : ids) o << id << "\n";
  };
  section("train", s.train);
  section("validation", s.validation);
  section("test", s.test);
  return o.str();
}

inline DatasetSplit parse_manifest(const std::string& text) {
  DatasetSplit s;
  std::vector<std::string>* cur = nullptr;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# seed ", 0) == 0) {
      s.seed = std::stoull(line.substr(7));
      continue;
    }
    if (line[0] == '#') continue;
    if (line == "[train]") cur = &s.train;
    else if (line == "[validation]") cur = &s.validation;
    else if (line == "[test]") cur = &s.test;
    else {
      require(cur != nullptr, ErrorCategory::format, "manifest: id '" + line + "' before any section header");
      cur->push_back(line);
    }
  }
  return s;
}

}  // namespace acnn
