#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "acnn/core/fft.hpp"
#include "acnn/core/kspace.hpp"
#include "acnn/data/dataset.hpp"
#include "acnn/data/neighborhood.hpp"
#include "acnn/network/model.hpp"

namespace acnn {

/// Network input for one slice of normalized undersampled k-space.
/// k-space kinds pack the 2s+1 neighborhood; image_unet packs the
/// zero-filled complex coil images of the slice itself.
inline ChannelTensor model_input(const ModelConfig& cfg, const ComplexVolume& undersampled, std::size_t slice) {
  require(undersampled.domain() == Domain::kspace, ErrorCategory::invalid_argument, "model_input expects k-space");
  require(undersampled.n_coils() == cfg.n_coils, ErrorCategory::shape_mismatch,
          "config expects " + std::to_string(cfg.n_coils) + " coils, volume has " +
              std::to_string(undersampled.n_coils()));
  require(undersampled.height() == cfg.input_size && undersampled.width() == cfg.input_size,
          ErrorCategory::shape_mismatch,
          "config expects " + std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size) +
              " planes, volume has " + std::to_string(undersampled.height()) + "x" +
              std::to_string(undersampled.width()));
  if (cfg.kspace_input()) {
    const auto groups = make_neighborhood(undersampled, slice, cfg.s());
    return pack_channels(groups);
  }
  const auto img = ifft2c(undersampled.slice(slice));
  return pack_channels(std::span<const ComplexVolume>(&img, 1));
}

/// Batched samples: inputs (N, C_in, H, W) and RSS targets (N, 1, H, W).
struct SampleSet {
  ChannelTensor inputs;
  ChannelTensor targets;
  std::vector<double> scales;       // normalization factor per sample
  std::vector<std::size_t> volume;  // source volume index per sample
  std::vector<std::size_t> slice;

  std::size_t size() const noexcept { return scales.size(); }
};

namespace detail {

inline void append(ChannelTensor& dst, const ChannelTensor& item) {
  if (dst.empty()) {
    dst = item;
    return;
  }
  Shape s = dst.shape();
  ++s[0];
  std::vector<float> data = std::move(dst.storage());
  data.insert(data.end(), item.storage().begin(), item.storage().end());
  dst = ChannelTensor(s, std::move(data));
}

}  // namespace detail

/// Normalized training samples for every slice of every fully sampled k-space
/// volume, given each volume's network-input k-space.
inline SampleSet build_samples(const ModelConfig& cfg, std::span<const ComplexVolume> volumes,
                               std::span<const ComplexVolume> undersampled) {
  require(volumes.size() == undersampled.size(), ErrorCategory::shape_mismatch,
          "build_samples: " + std::to_string(volumes.size()) + " volumes vs " +
              std::to_string(undersampled.size()) + " undersampled volumes");
  SampleSet set;
  std::vector<float> in, tgt;
  std::size_t count = 0;
  for (std::size_t v = 0; v < volumes.size(); ++v) {
    const auto& full = volumes[v];
    require(full.n_slices() == undersampled[v].n_slices() && full.n_coils() == undersampled[v].n_coils() &&
                full.height() == undersampled[v].height() && full.width() == undersampled[v].width(),
            ErrorCategory::shape_mismatch, "build_samples: undersampled volume shape differs from its source");
    const double scale = normalization_scale(undersampled[v]);
    const auto u = scaled(undersampled[v], scale);
    const auto truth = rss_combine_all(ifft2c(scaled(full, scale)));
    for (std::size_t s = 0; s < full.n_slices(); ++s) {
      const auto x = model_input(cfg, u, s);
      in.insert(in.end(), x.storage().begin(), x.storage().end());
      for (double p : truth[s].pixels) tgt.push_back(static_cast<float>(p));
      set.scales.push_back(scale);
      set.volume.push_back(v);
      set.slice.push_back(s);
      ++count;
    }
  }
  const std::size_t h = cfg.input_size;
  set.inputs = ChannelTensor({count, cfg.in_channels(), h, h}, std::move(in));
  set.targets = ChannelTensor({count, 1, h, h}, std::move(tgt));
  return set;
}

inline SampleSet build_samples(const ModelConfig& cfg, std::span<const ComplexVolume> volumes,
                               const Sampling& sampling) {
  std::vector<ComplexVolume> under;
  under.reserve(volumes.size());
  for (const auto& v : volumes) under.push_back(undersample(v, sampling));
  return build_samples(cfg, volumes, std::span<const ComplexVolume>(under));
}

/// Items [first, first + n) of a batched tensor, or the listed indices.
inline ChannelTensor gather(const ChannelTensor& t, std::span<const std::size_t> idx) {
  Shape s = t.shape();
  const std::size_t per = t.numel() / s[0];
  s[0] = idx.size();
  std::vector<float> out;
  out.reserve(idx.size() * per);
  for (auto i : idx) out.insert(out.end(), t.data() + i * per, t.data() + (i + 1) * per);
  return ChannelTensor(std::move(s), std::move(out));
}

/// RSS magnitude image of the network output, as a tape node (N, 1, H, W).
template <class T>
ad::Var reconstruct_graph(ad::Tape<T>& tape, Model<T>& model, ad::Var x, ad::Mode mode,
                          ForwardTrace* trace = nullptr) {
  auto out = model.forward(tape, x, mode, trace);
  if (model.config().kspace_input()) out = ad::ifft2c_channels(tape, out, "ifft2c");
  return ad::rss_combine(tape, out, "rss");
}

/// Training objective: mean squared error between RSS reconstruction and target.
template <class T>
ad::Var loss_graph(ad::Tape<T>& tape, Model<T>& model, ad::Var x, ad::Var target, ad::Mode mode) {
  auto rss = reconstruct_graph(tape, model, x, mode);
  return ad::mse_loss(tape, rss, target, "loss");
}

/// Zero-filled RSS reconstruction of every slice.
inline std::vector<Image> zero_filled(const ComplexVolume& undersampled) {
  return rss_combine_all(ifft2c(undersampled));
}

/// Eval-mode reconstruction of every slice of an undersampled k-space volume,
/// returned at the volume's own intensity scale.
inline std::vector<Image> reconstruct(Model<float>& model, const ComplexVolume& undersampled,
                                      std::size_t batch = 8) {
  const auto& cfg = model.config();
  const double scale = normalization_scale(undersampled);
  const auto u = scaled(undersampled, scale);
  std::vector<Image> out;
  const std::size_t n = u.n_slices(), h = u.height(), w = u.width();
  for (std::size_t first = 0; first < n; first += batch) {
    const std::size_t count = std::min(batch, n - first);
    ChannelTensor x;
    for (std::size_t s = first; s < first + count; ++s) detail::append(x, model_input(cfg, u, s));
    ad::Tape<float> tape;
    auto in = tape.input(std::move(x), false, "input");
    auto rss = reconstruct_graph(tape, model, in, ad::Mode::eval);
    const auto& r = tape.value(rss);
    for (std::size_t b = 0; b < count; ++b) {
      Image im(h, w);
      for (std::size_t i = 0; i < h * w; ++i) im.pixels[i] = static_cast<double>(r[b * h * w + i]) / scale;
      out.push_back(std::move(im));
    }
  }
  return out;
}

/// Per-input-channel response |dL/dx_c|_1 of the training loss.
inline std::vector<double> input_channel_response(Model<float>& model, const ChannelTensor& input,
                                                  const ChannelTensor& target) {
  ad::Tape<float> tape;
  auto x = tape.input(input, true, "input");
  auto t = tape.input(target, false, "target");
  auto loss = loss_graph(tape, model, x, t, ad::Mode::eval);
  tape.backward(loss);
  const auto& g = tape.grad(x);
  const std::size_t n = input.n(), c = input.c(), hw = input.h() * input.w();
  std::vector<double> r(c, 0.0);
  if (g.empty()) return r;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) r[ch] += std::abs(static_cast<double>(g[(b * c + ch) * hw + i]));
  return r;
}

/// Divides each consecutive group of `group` responses by the group's maximum.
inline std::vector<double> normalize_per_group(std::vector<double> r, std::size_t group) {
  require(group > 0 && r.size() % group == 0, ErrorCategory::invalid_argument,
          "response normalization: group size does not divide channel count");
  for (std::size_t g = 0; g < r.size(); g += group) {
    const double m = *std::max_element(r.begin() + static_cast<long>(g), r.begin() + static_cast<long>(g + group));
    if (m > 0.0)
      for (std::size_t i = g; i < g + group; ++i) r[i] /= m;
  }
  return r;
}

}  // namespace acnn
