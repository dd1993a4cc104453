#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "acnn/core/fft.hpp"
#include "acnn/core/kspace.hpp"
#include "acnn/data/dataset.hpp"
#include "acnn/data/neighborhood.hpp"
#include "acnn/data/phantom.hpp"
#include "acnn/data/split.hpp"
#include "acnn/data/volume_io.hpp"
#include "oracles.hpp"

using namespace acnn;

namespace {

template <class F>
void expect_format_error(F&& f, const std::string& fragment) {
  try {
    f();
    ADD_FAILURE() << "expected a format error mentioning '" << fragment << "'";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::format) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

ComplexVolume decode(std::vector<char> b) {
  io::Reader r(std::move(b), "test.kspv");
  return decode_volume(r);
}

CartesianMask decode_msk(std::vector<char> b) {
  io::Reader r(std::move(b), "test.msk");
  return decode_mask(r);
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Kspv, RoundTripIsBitExact) {
  for (auto d : {Domain::kspace, Domain::image}) {
    auto v = oracle::random_volume(2, 2, 2, 2, d, 3);
    v.at(1, 1, 1, 1) = cfloat(-0.0f, 1e-40f);  // signed zero and a subnormal
    const auto back = decode(encode_volume(v));
    EXPECT_EQ(back, v);
    EXPECT_EQ(back.domain(), d);
    EXPECT_TRUE(std::signbit(back.at(1, 1, 1, 1).real()));
  }
  const auto v = oracle::random_volume(3, 2, 5, 7, Domain::kspace, 4);
  const auto dir = std::filesystem::temp_directory_path() / "acnn_test_kspv";
  write_volume(dir / "v.kspv", v);
  EXPECT_EQ(read_volume(dir / "v.kspv"), v);
  std::filesystem::remove_all(dir);
}

TEST(Kspv, HeaderLayout) {
  const auto b = encode_volume(ComplexVolume(1, 2, 3, 4, Domain::image));
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "KSPV");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 1);  // image
  EXPECT_EQ(b[7], 1);  // n_slices, little endian
  EXPECT_EQ(b[11], 2);
  EXPECT_EQ(b[15], 3);
  EXPECT_EQ(b[19], 4);
  EXPECT_EQ(b.size(), 23u + 24u * 8u);
}

TEST(Kspv, MalformedFilesHaveDistinctDiagnostics) {
  const auto good = encode_volume(oracle::random_volume(2, 2, 2, 2, Domain::kspace, 5));
  auto magic = good;
  magic[1] = 'Q';
  expect_format_error([&] { decode(magic); }, "bad magic");
  auto version = good;
  version[4] = 2;
  expect_format_error([&] { decode(version); }, "version mismatch");
  expect_format_error([&] { decode(std::vector<char>(good.begin(), good.end() - 8)); }, "truncated");
  auto huge = good;
  huge[7] = static_cast<char>(0xff);  // n_slices far above the payload
  expect_format_error([&] { decode(huge); }, "truncated");
  expect_format_error([&] { decode(std::vector<char>(good.begin(), good.begin() + 10)); }, "truncated");
  auto tag = good;
  tag[6] = 7;
  expect_format_error([&] { decode(tag); }, "domain");
  auto trailing = good;
  trailing.push_back(0);
  expect_format_error([&] { decode(trailing); }, "trailing");
  expect_format_error([&] { decode({}); }, "bad magic");
}

TEST(Kspv, MissingFileIsIoError) {
  try {
    read_volume("/nonexistent/acnn/none.kspv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::io);
  }
}

TEST(Msk1, RoundTripAndErrors) {
  const auto m = make_cartesian_mask(16, 32, 4.0, 3);
  const auto bytes = encode_mask(m);
  const auto back = decode_msk(bytes);
  EXPECT_EQ(back.bits, m.bits);
  EXPECT_EQ(back.height, 16u);
  EXPECT_EQ(back.width, 32u);
  EXPECT_DOUBLE_EQ(back.acceleration, 4.0);
  auto magic = bytes;
  magic[0] = 'K';
  expect_format_error([&] { decode_msk(magic); }, "bad magic");
  auto version = bytes;
  version[4] = 3;
  expect_format_error([&] { decode_msk(version); }, "version mismatch");
  expect_format_error([&] { decode_msk(std::vector<char>(bytes.begin(), bytes.end() - 1)); }, "truncated");
  auto bad_byte = bytes;
  bad_byte.back() = 2;
  expect_format_error([&] { decode_msk(bad_byte); }, "0/1");
}

TEST(Phantom, DeterministicPerSeed) {
  PhantomSpec spec;
  spec.n_slices = 3;
  spec.height = spec.width = 32;
  spec.seed = 12;
  EXPECT_EQ(gen_phantom(spec), gen_phantom(spec));
  auto other = spec;
  other.seed = 13;
  EXPECT_NE(gen_phantom(spec), gen_phantom(other));
  EXPECT_EQ(gen_phantom(spec).domain(), Domain::image);
}

TEST(Phantom, SingleCoilRssIsTheMagnitude) {
  PhantomSpec spec;
  spec.n_slices = 3;
  spec.height = spec.width = 32;
  spec.seed = 4;
  spec.n_coils = 1;
  const auto one = gen_phantom(spec);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto r = rss_combine(one, s);
    for (std::size_t i = 0; i < r.size(); ++i)
      EXPECT_DOUBLE_EQ(r.pixels[i], std::abs(std::complex<double>(one.plane(s, 0)[i])));
  }
  // unit-RSS sensitivities: more coils leave the combined magnitude unchanged
  spec.n_coils = 4;
  const auto four = gen_phantom(spec);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto a = rss_combine(one, s), b = rss_combine(four, s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.pixels[i], b.pixels[i], 1e-5);
  }
}

TEST(Phantom, AdjacentSlicesCorrelated) {
  for (double drift : {0.02, 0.04})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      PhantomSpec spec;
      spec.seed = seed;
      spec.slice_drift = drift;
      const auto rss = rss_combine_all(gen_phantom(spec));
      for (std::size_t s = 0; s + 1 < rss.size(); ++s)
        EXPECT_GT(correlation(rss[s].pixels, rss[s + 1].pixels), 0.9) << drift << " seed " << seed << " slice " << s;
    }
}

TEST(Phantom, RejectsInvalidSpec) {
  PhantomSpec spec;
  spec.width = 32;
  EXPECT_THROW(gen_phantom(spec), Error);
  spec = {};
  spec.n_ellipses = 0;
  EXPECT_THROW(gen_phantom(spec), Error);
}

TEST(Neighborhood, EdgePadding) {
  EXPECT_EQ(neighborhood_indices(5, 2, 0), (std::vector<std::size_t>{2}));
  EXPECT_EQ(neighborhood_indices(5, 0, 1), (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(neighborhood_indices(4, 3, 2), (std::vector<std::size_t>{1, 2, 3, 3, 3}));
  EXPECT_EQ(neighborhood_indices(1, 0, 2), (std::vector<std::size_t>{0, 0, 0, 0, 0}));
  EXPECT_THROW(neighborhood_indices(4, 4, 1), Error);
}

TEST(Neighborhood, SizeAndCentreProperty) {
  const auto v = oracle::random_volume(6, 2, 3, 3, Domain::kspace, 8);
  for (std::size_t s = 0; s <= 3; ++s)
    for (std::size_t i = 0; i < 6; ++i) {
      const auto groups = make_neighborhood(v, i, s);
      ASSERT_EQ(groups.size(), 2 * s + 1);
      EXPECT_EQ(groups[s], v.slice(i));
      for (const auto& g : groups) EXPECT_EQ(g.n_slices(), 1u);
    }
}

TEST(Split, LargestRemainderSizes) {
  EXPECT_EQ(split_sizes(20, {15.0 / 20, 1.0 / 20, 4.0 / 20}), (std::array<std::size_t, 3>{15, 1, 4}));
  EXPECT_EQ(split_sizes(570, {500.0 / 570, 10.0 / 570, 60.0 / 570}), (std::array<std::size_t, 3>{500, 10, 60}));
  EXPECT_EQ(split_sizes(12, {0.75, 0.05, 0.20}), (std::array<std::size_t, 3>{9, 1, 2}));
  EXPECT_THROW(split_sizes(10, {0.5, 0.2, 0.2}), Error);
}

TEST(Split, DisjointCoveringAndDeterministic) {
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("vol" + std::to_string(i));
  const auto a = split_dataset(ids, {0.75, 0.05, 0.20}, 7);
  const auto b = split_dataset(ids, {0.75, 0.05, 0.20}, 7);
  const auto c = split_dataset(ids, {0.75, 0.05, 0.20}, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 20u);
  EXPECT_EQ(a.train.size() + a.validation.size() + a.test.size(), 20u);
  EXPECT_THROW(split_dataset({}, {1.0, 0.0, 0.0}, 1), Error);
}

TEST(Split, ManifestRoundTrip) {
  std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  const auto s = split_dataset(ids, {0.6, 0.2, 0.2}, 3);
  const auto back = parse_manifest(format_manifest(s));
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.validation, s.validation);
  EXPECT_EQ(back.test, s.test);
  EXPECT_EQ(back.seed, 3u);
  const auto crlf = parse_manifest("[train]\r\nx\r\n[test]\r\ny\r\n");
  EXPECT_EQ(crlf.train, std::vector<std::string>{"x"});
  EXPECT_EQ(crlf.test, std::vector<std::string>{"y"});
  EXPECT_THROW(parse_manifest("orphan\n[train]\n"), Error);
}

TEST(Dataset, NormalizationScaleIsPowerOfTwo) {
  PhantomSpec spec;
  spec.n_slices = 2;
  spec.height = spec.width = 32;
  const auto k = fft2c(gen_phantom(spec));
  for (double gain : {1e-3, 1.0, 37.0}) {
    const auto v = scaled(k, gain);
    const double s = normalization_scale(v);
    int e = 0;
    EXPECT_EQ(std::frexp(s, &e), 0.5);
    double peak = 0.0;
    for (const auto& im : rss_combine_all(ifft2c(scaled(v, s))))
      for (double p : im.pixels) peak = std::max(peak, p);
    EXPECT_GT(peak, 0.5);
    EXPECT_LE(peak, 1.0 + 1e-6);
  }
  EXPECT_EQ(normalization_scale(ComplexVolume(1, 1, 4, 4, Domain::kspace)), 1.0);
}

TEST(Dataset, CartesianUndersamplingKeepsSampledLines) {
  const auto k = oracle::random_volume(2, 2, 8, 8, Domain::kspace, 2);
  const auto m = make_cartesian_mask(8, 8, 2.0, 1);
  const auto u = undersample(k, Sampling::cartesian(m));
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t col = 0; col < 8; ++col)
          EXPECT_EQ(u.at(s, c, r, col), m.sampled(r, col) ? k.at(s, c, r, col) : cfloat(0.0f, 0.0f));
  EXPECT_THROW(undersample(ifft2c(k), Sampling::cartesian(m)), Error);
}
