#include "common.hpp"

#include <cstdio>
#include <sstream>

namespace acnn::cli {

std::vector<KeySpec> global_keys(const std::string& default_out) {
  return {{"seed", "0", "random seed (masks, phantoms, initialization, shuffling)"},
          {"out", default_out, "output directory"}};
}

std::vector<KeySpec> sampling_keys() {
  return {{"sampling", "cartesian", "undersampling pattern: cartesian|radial"},
          {"mask", "", "MSK1 Cartesian mask file; empty draws one from --seed"},
          {"acceleration", "4", "Cartesian acceleration factor R"},
          {"spokes", "60", "radial spoke count"},
          {"readout", "0", "radial samples per spoke; 0 uses the plane width"},
          {"kernel-width", "4", "Kaiser-Bessel kernel width in oversampled cells"},
          {"oversampling", "2", "gridding oversampling ratio"}};
}

std::vector<KeySpec> model_keys() {
  return {{"kind", "acnn", "model: acnn|kspace_unet|image_unet"},
          {"s", "1", "neighbouring slices on each side (2s+1 input slices; image_unet uses 0)"},
          {"model-size", "toy", "width preset: toy (16,32,64 / 128 / 8) or standard (64..512 / 1024 / 32)"},
          {"widths", "", "encoder widths, comma separated; overrides the preset"},
          {"bottleneck", "0", "bottleneck width; 0 keeps the preset"},
          {"final-hidden", "0", "final hidden width; 0 keeps the preset"},
          {"attention-mode", "parallel", "attention block: parallel|cf|fc (acnn only)"},
          {"ablate-attention", "both", "attention branches kept: none|channel|frequency|both (acnn only)"}};
}

std::vector<KeySpec> training_keys() {
  return {{"data", "data", "directory of KSPV volumes written by gen-data"},
          {"split", "", "split manifest; empty uses <data>/split.txt"},
          {"epochs", "30", "training epochs"},
          {"batch", "16", "batch size"},
          {"lr-start", "1e-4", "learning rate of the first epoch"},
          {"lr-end", "1e-5", "learning rate of the last epoch (geometric decay)"},
          {"weight-decay", "1e-4", "L2 weight decay"}};
}

std::vector<KeySpec> join(std::initializer_list<std::vector<KeySpec>> groups) {
  std::vector<KeySpec> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

Sampling sampling_from(const RunConfig& cfg, std::size_t size) {
  const auto kind = parse_sampling_kind(cfg.str("sampling"));
  if (kind == SamplingKind::cartesian) {
    if (!cfg.empty("mask")) {
      auto m = read_mask(cfg.str("mask"));
      require(m.height == size && m.width == size, ErrorCategory::shape_mismatch,
              "mask " + cfg.str("mask") + " is " + std::to_string(m.height) + "x" + std::to_string(m.width) +
                  ", data planes are " + std::to_string(size) + "x" + std::to_string(size));
      return Sampling::cartesian(std::move(m));
    }
    return Sampling::cartesian(make_cartesian_mask(size, size, cfg.real("acceleration"), cfg.u64("seed")));
  }
  const std::size_t readout = cfg.count("readout") == 0 ? size : cfg.count("readout");
  GriddingConfig g;
  g.kernel_width = cfg.real("kernel-width");
  g.oversampling = cfg.real("oversampling");
  g.target_size = size;
  g.validate();
  return Sampling::radial(make_radial_trajectory(cfg.count("spokes"), readout), g);
}

ModelConfig model_config_from(const RunConfig& cfg, std::size_t n_coils, std::size_t size) {
  const auto kind = parse_model_kind(cfg.str("kind"));
  const std::size_t s = kind == ModelKind::image_unet ? 0 : cfg.count("s");
  ModelConfig m;
  if (cfg.str("model-size") == "toy") m = ModelConfig::toy(kind, s, n_coils);
  else if (cfg.str("model-size") == "standard") m = ModelConfig::standard(kind, s, n_coils);
  else fail(ErrorCategory::invalid_argument, "unknown model-size '" + cfg.str("model-size") + "' (toy|standard)");
  m.input_size = size;
  if (!cfg.empty("widths")) m.encoder_widths = cfg.count_list("widths");
  if (cfg.count("bottleneck") > 0) m.bottleneck_width = cfg.count("bottleneck");
  if (cfg.count("final-hidden") > 0) m.final_hidden_width = cfg.count("final-hidden");
  const auto mode = parse_attention_mode(cfg.str("attention-mode"));
  const auto ablation = attention_ablation(cfg.str("ablate-attention"), mode);
  if (kind == ModelKind::acnn) m.attention = ablation;
  else m.attention = {mode, false, false};
  m.validate();
  return m;
}

TrainOptions train_options_from(const RunConfig& cfg) {
  TrainOptions t;
  t.epochs = cfg.count("epochs");
  t.batch_size = cfg.count("batch");
  t.lr_start = cfg.real("lr-start");
  t.lr_end = cfg.real("lr-end");
  t.weight_decay = cfg.real("weight-decay");
  t.seed = cfg.u64("seed");
  require(t.lr_start > 0.0 && t.lr_end > 0.0, ErrorCategory::invalid_argument, "learning rates must be positive");
  require(t.weight_decay >= 0.0, ErrorCategory::invalid_argument, "weight decay must be >= 0");
  return t;
}

Corpus load_corpus(const RunConfig& cfg) {
  Corpus c;
  c.dir = cfg.str("data");
  const std::filesystem::path manifest = cfg.empty("split") ? c.dir / "split.txt" : std::filesystem::path(cfg.str("split"));
  const auto bytes = io::read_file(manifest);
  c.split = parse_manifest(std::string(bytes.begin(), bytes.end()));
  return c;
}

std::vector<ComplexVolume> load_volumes(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<ComplexVolume> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto v = read_volume(corpus.dir / (id + ".kspv"));
    require(v.domain() == Domain::kspace, ErrorCategory::invalid_argument, id + ".kspv: expected a k-space volume");
    require(out.empty() || (v.n_coils() == out[0].n_coils() && v.height() == out[0].height() &&
                            v.width() == out[0].width()),
            ErrorCategory::shape_mismatch, id + ".kspv: shape " + v.shape_string() + " differs from the first volume");
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

std::string radial_cache_tag(const Sampling& s) {
  std::ostringstream o;
  o << "radial_" << s.trajectory.n_spokes << "x" << s.trajectory.n_readout << "_w" << s.gridding.kernel_width << "_os"
    << s.gridding.oversampling;
  return o.str();
}

}  // namespace

std::vector<ComplexVolume> network_inputs(const Corpus& corpus, const std::vector<std::string>& ids,
                                          const std::vector<ComplexVolume>& volumes, const Sampling& sampling) {
  std::vector<ComplexVolume> out;
  out.reserve(volumes.size());
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (sampling.kind == SamplingKind::cartesian) {
      out.push_back(undersample(volumes[i], sampling));
      continue;
    }
    const auto path = corpus.dir / radial_cache_tag(sampling) / (ids[i] + ".kspv");
    if (std::filesystem::exists(path)) {
      auto cached = read_volume(path);
      if (cached.same_shape(volumes[i]) && cached.domain() == Domain::kspace) {
        out.push_back(std::move(cached));
        continue;
      }
    }
    out.push_back(undersample(volumes[i], sampling));
    write_volume(path, out.back());
  }
  return out;
}

std::vector<Image> rss_images(const ComplexVolume& v) {
  return v.domain() == Domain::kspace ? rss_combine_all(ifft2c(v)) : rss_combine_all(v);
}

ComplexVolume images_to_volume(const std::vector<Image>& images) {
  require(!images.empty(), ErrorCategory::invalid_argument, "no images to store");
  const std::size_t h = images[0].height, w = images[0].width;
  ComplexVolume v(images.size(), 1, h, w, Domain::image);
  for (std::size_t s = 0; s < images.size(); ++s) {
    auto p = v.plane(s, 0);
    for (std::size_t i = 0; i < h * w; ++i) p[i] = cfloat(static_cast<float>(images[s].pixels[i]), 0.0f);
  }
  return v;
}

std::size_t slice_from(const RunConfig& cfg, std::size_t n_slices) {
  if (cfg.empty("slice")) return n_slices / 2;
  const auto s = cfg.count("slice");
  require(s < n_slices, ErrorCategory::invalid_argument,
          "slice " + std::to_string(s) + " out of range for " + std::to_string(n_slices) + " slices");
  return s;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace acnn::cli
