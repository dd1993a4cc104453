#include <cmath>
#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "png_writer.hpp"

namespace acnn::cli {

namespace {

// Distinct, seed-dependent phantom seeds per volume.
std::uint64_t volume_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::array<double, 3> parse_fractions(const RunConfig& cfg) {
  const auto parts = cfg.str_list("split-fractions");
  require(parts.size() == 3, ErrorCategory::invalid_argument,
          "split-fractions: expected train,validation,test, got '" + cfg.str("split-fractions") + "'");
  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) {
    std::size_t used = 0;
    try {
      f[i] = std::stod(parts[i], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == parts[i].size(), ErrorCategory::invalid_argument, "split-fractions: bad number '" + parts[i] + "'");
  }
  return f;
}

}  // namespace

void cmd_gen_data(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  const std::size_t count = cfg.count("count");
  require(count >= 1, ErrorCategory::invalid_argument, "count must be >= 1");
  const auto fractions = parse_fractions(cfg);
  PhantomSpec spec;
  spec.n_slices = cfg.count("slices");
  spec.n_coils = cfg.count("coils");
  spec.height = spec.width = cfg.count("size");
  spec.n_ellipses = cfg.count("ellipses");
  spec.slice_drift = cfg.real("drift");

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "vol_%03zu", i);
    spec.seed = volume_seed(cfg.u64("seed"), i);
    write_volume(out / (std::string(id) + ".kspv"), fft2c(gen_phantom(spec)));
    ids.emplace_back(id);
  }
  const auto split = split_dataset(ids, fractions, cfg.u64("seed"));
  io::write_text(out / "split.txt", format_manifest(split));
  cfg.save(out, "gen-data");
  std::printf("wrote %zu k-space volumes (%zux%zux%zux%zu) and split.txt (%zu/%zu/%zu) to %s\n", count, spec.n_slices,
              spec.n_coils, spec.height, spec.width, split.train.size(), split.validation.size(), split.test.size(),
              out.string().c_str());
}

void cmd_make_mask(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  const std::size_t size = cfg.count("size");
  const auto sampling = sampling_from(cfg, size);
  if (sampling.kind == SamplingKind::cartesian) {
    const auto& m = sampling.mask;
    write_mask(out / "mask.msk1", m);
    write_png_gray(out / "mask.png", m.height, m.width, [&] {
      std::vector<std::uint8_t> px(m.bits.size());
      for (std::size_t i = 0; i < px.size(); ++i) px[i] = m.bits[i] ? 255 : 0;
      return px;
    }());
    cfg.set("mask", (out / "mask.msk1").string());
    std::printf("cartesian mask %zux%zu: %zu of %zu lines, DC line %s\n", m.height, m.width, m.sampled_columns().size(),
                m.width, m.sampled(0, m.width / 2) ? "sampled" : "missing");
  } else {
    const auto& t = sampling.trajectory;
    std::ostringstream csv;
    csv << "spoke,sample,kx,ky\n";
    Image coverage(size, size);
    for (std::size_t s = 0; s < t.n_spokes; ++s)
      for (std::size_t j = 0; j < t.n_readout; ++j) {
        const auto& k = t.at(s, j);
        csv << s << "," << j << "," << format_double(k.kx) << "," << format_double(k.ky) << "\n";
        const auto r = static_cast<long>(std::floor(k.ky * static_cast<double>(size))) + static_cast<long>(size / 2);
        const auto c = static_cast<long>(std::floor(k.kx * static_cast<double>(size))) + static_cast<long>(size / 2);
        if (r >= 0 && c >= 0 && r < static_cast<long>(size) && c < static_cast<long>(size))
          coverage(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1.0;
      }
    io::write_text(out / "trajectory.csv", csv.str());
    write_png_gray(out / "trajectory.png", size, size, to_gray(coverage, 1.0));
    std::printf("radial trajectory: %zu spokes x %zu readout points\n", t.n_spokes, t.n_readout);
  }
  cfg.save(out, "make-mask");
}

}  // namespace acnn::cli
