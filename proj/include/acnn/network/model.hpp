#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "acnn/autodiff/ops.hpp"
#include "acnn/core/random.hpp"
#include "acnn/network/attention.hpp"

namespace acnn {

enum class ModelKind : unsigned char { acnn = 0, kspace_unet = 1, image_unet = 2 };

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::acnn: return "acnn";
    case ModelKind::kspace_unet: return "kspace_unet";
    case ModelKind::image_unet: return "image_unet";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "acnn") return ModelKind::acnn;
  if (s == "kspace_unet") return ModelKind::kspace_unet;
  if (s == "image_unet") return ModelKind::image_unet;
  fail(ErrorCategory::invalid_argument, "unknown model kind '" + std::string(s) + "' (acnn|kspace_unet|image_unet)");
}

struct ModelConfig {
  ModelKind kind = ModelKind::acnn;
  std::size_t n_slices = 1;  // 2s + 1; always 1 for image_unet
  std::size_t n_coils = 1;
  std::vector<std::size_t> encoder_widths{64, 128, 256, 512};
  std::size_t bottleneck_width = 1024;
  std::size_t final_hidden_width = 32;
  AttentionBlockConfig attention{};
  std::size_t input_size = 256;

  std::size_t s() const noexcept { return n_slices / 2; }
  std::size_t levels() const noexcept { return encoder_widths.size(); }
  std::size_t in_channels() const noexcept { return 2 * n_slices * n_coils; }
  std::size_t out_channels() const noexcept { return 2 * n_coils; }
  bool kspace_input() const noexcept { return kind != ModelKind::image_unet; }
  bool has_attention() const noexcept { return kind == ModelKind::acnn && attention.enabled(); }

  /// Full-size widths with the given kind, neighborhood half-width and coil count.
  static ModelConfig standard(ModelKind kind, std::size_t s, std::size_t n_coils, std::size_t input_size = 256) {
    ModelConfig c;
    c.kind = kind;
    c.n_slices = kind == ModelKind::image_unet ? 1 : 2 * s + 1;
    c.n_coils = n_coils;
    c.input_size = input_size;
    if (kind != ModelKind::acnn) c.attention = {AttentionMode::parallel, false, false};
    return c;
  }

  /// Desk-scale topology: 64x64 inputs, widths 16/32/64, bottleneck 128, final hidden 8.
  static ModelConfig toy(ModelKind kind, std::size_t s, std::size_t n_coils) {
    ModelConfig c = standard(kind, s, n_coils, 64);
    c.encoder_widths = {16, 32, 64};
    c.bottleneck_width = 128;
    c.final_hidden_width = 8;
    return c;
  }

  void validate() const {
    require(n_slices % 2 == 1, ErrorCategory::invalid_argument,
            "model: n_slices must be odd (2s+1), got " + std::to_string(n_slices));
    require(kind != ModelKind::image_unet || n_slices == 1, ErrorCategory::invalid_argument,
            "model: image_unet takes a single slice");
    require(n_coils >= 1, ErrorCategory::invalid_argument, "model: n_coils must be >= 1");
    require(!encoder_widths.empty(), ErrorCategory::invalid_argument, "model: need at least one encoder level");
    for (auto w : encoder_widths) require(w >= 1, ErrorCategory::invalid_argument, "model: zero encoder width");
    require(bottleneck_width >= 1 && final_hidden_width >= 1, ErrorCategory::invalid_argument,
            "model: zero bottleneck or final hidden width");
    require(kind == ModelKind::acnn || !attention.enabled(), ErrorCategory::invalid_argument,
            "model: attention blocks are only valid for kind acnn");
    const std::size_t div = std::size_t{1} << levels();
    require(input_size >= div && input_size % div == 0, ErrorCategory::shape_mismatch,
            "model: input size " + std::to_string(input_size) + " not divisible by 2^" + std::to_string(levels()) +
                " = " + std::to_string(div) + " required by " + std::to_string(levels()) + " pooling levels");
  }

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.kind == b.kind && a.n_slices == b.n_slices && a.n_coils == b.n_coils &&
           a.encoder_widths == b.encoder_widths && a.bottleneck_width == b.bottleneck_width &&
           a.final_hidden_width == b.final_hidden_width && a.attention.mode == b.attention.mode &&
           a.attention.channel == b.attention.channel && a.attention.frequency == b.attention.frequency &&
           a.input_size == b.input_size;
  }
};

/// Attention maps recorded during a forward pass, one entry per insertion point.
struct ForwardTrace {
  std::vector<std::string> labels;
  std::vector<AttentionMaps> maps;
};

/// Residual U-Net with optional attention blocks before every pool and unpool.
template <class T>
class Model {
 public:
  Model() = default;
  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    declare();
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  ad::ParameterStore<T>& params() noexcept { return params_; }
  const ad::ParameterStore<T>& params() const noexcept { return params_; }

  /// Kaiming-uniform conv/linear weights, zero biases, BN scale 1 / shift 0,
  /// running mean 0 / variance 1. The output 1x1 conv starts at zero so the
  /// untrained model is the zero-filled pipeline.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : params_) {
      const auto& name = p.name;
      auto ends_with = [&](std::string_view suf) {
        return name.size() >= suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
      };
      if (ends_with(".running_var") || ends_with(".gamma")) {
        p.value.fill(T{1});
      } else if (ends_with(".running_mean") || ends_with(".beta") || ends_with(".bias") || name == "output.weight") {
        // A zero output layer starts every kind at its zero-filled input.
        p.value.fill(T{0});
      } else {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in(p)));
        for (auto& v : p.value.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
      }
      p.zero_grad();
    }
  }

  /// Sets the output layer to zero, making the residual path an identity.
  void zero_output_layer() { params_.find("output.weight")->value.fill(T{0}); }

  /// Network output for packed input x (N, in_channels, H, W), including the
  /// residual onto the centre slice (k-space or zero-filled image channels).
  ad::Var forward(ad::Tape<T>& tape, ad::Var x, ad::Mode mode, ForwardTrace* trace = nullptr) {
    const auto& X = tape.value(x);
    require(X.rank() == 4 && X.c() == cfg_.in_channels(), ErrorCategory::shape_mismatch,
            "model input: expected (N, " + std::to_string(cfg_.in_channels()) + ", H, W), got " +
                shape_string(X.shape()));
    const std::size_t div = std::size_t{1} << cfg_.levels();
    require(X.h() % div == 0 && X.w() % div == 0, ErrorCategory::shape_mismatch,
            "model input: spatial size " + std::to_string(X.h()) + "x" + std::to_string(X.w()) +
                " not divisible by " + std::to_string(div));

    tape_ = &tape;
    std::vector<ad::Var> skips;
    ad::Var h = x;
    for (std::size_t l = 0; l < cfg_.levels(); ++l) {
      const std::string name = "enc" + std::to_string(l);
      h = stage(tape, h, name, mode);
      h = attention(tape, h, "att_" + name, trace);
      skips.push_back(h);
      h = ad::maxpool2d(tape, h, name + ".pool");
    }
    h = stage(tape, h, "bottleneck", mode);
    for (std::size_t l = cfg_.levels(); l-- > 0;) {
      const std::string name = "dec" + std::to_string(l);
      h = attention(tape, h, "att_" + name, trace);
      h = ad::conv2d_transpose(tape, h, p(name + ".up.weight"), p(name + ".up.bias"), name + ".up");
      const ad::Var parts[2] = {skips[l], h};
      h = ad::concat<T>(tape, parts, name + ".concat");
      h = stage(tape, h, name, mode);
    }
    h = conv_relu_bn(tape, h, "final_hidden", 1, mode);
    h = ad::conv2d(tape, h, p("output.weight"), ad::Var{}, 0, "output");
    auto centre = ad::slice_channels(tape, x, cfg_.s() * cfg_.out_channels(), cfg_.out_channels(), "residual.input");
    return ad::add(tape, h, centre, "residual");
  }

 private:
  void declare() {
    const std::size_t cin = cfg_.in_channels();
    std::size_t prev = cin;
    for (std::size_t l = 0; l < cfg_.levels(); ++l) {
      declare_stage("enc" + std::to_string(l), prev, cfg_.encoder_widths[l]);
      declare_attention("att_enc" + std::to_string(l), cfg_.encoder_widths[l]);
      prev = cfg_.encoder_widths[l];
    }
    declare_stage("bottleneck", prev, cfg_.bottleneck_width);
    prev = cfg_.bottleneck_width;
    for (std::size_t l = cfg_.levels(); l-- > 0;) {
      const std::string name = "dec" + std::to_string(l);
      const std::size_t w = cfg_.encoder_widths[l];
      declare_attention("att_" + name, prev);
      params_.add(name + ".up.weight", {prev, w, 2, 2});
      params_.add(name + ".up.bias", {w});
      declare_stage(name, 2 * w, w);
      prev = w;
    }
    declare_conv_bn("final_hidden", prev, cfg_.final_hidden_width, 3);
    params_.add("output.weight", {cfg_.out_channels(), cfg_.final_hidden_width, 1, 1});
  }

  void declare_conv_bn(const std::string& name, std::size_t cin, std::size_t cout, std::size_t k) {
    params_.add(name + ".weight", {cout, cin, k, k});
    params_.add(name + ".bias", {cout});
    params_.add(name + ".bn.gamma", {cout});
    params_.add(name + ".bn.beta", {cout});
    params_.add(name + ".bn.running_mean", {cout}, false);
    params_.add(name + ".bn.running_var", {cout}, false);
  }

  void declare_stage(const std::string& name, std::size_t cin, std::size_t cout) {
    declare_conv_bn(name + ".conv1", cin, cout, 3);
    declare_conv_bn(name + ".conv2", cout, cout, 3);
  }

  void declare_attention(const std::string& name, std::size_t c) {
    if (!cfg_.has_attention()) return;
    if (cfg_.attention.frequency) {
      params_.add(name + ".W_conv", {1, c, 1, 1});
      params_.add(name + ".b_conv", {1});
    }
    if (cfg_.attention.channel) params_.add(name + ".W_fc", {c, c});
  }

  std::size_t fan_in(const ad::Parameter<T>& p) const {
    const auto& s = p.value.shape();
    if (p.name.find(".up.") != std::string::npos) return s[0];  // each output pixel sees Ci inputs
    std::size_t f = 1;
    for (std::size_t i = 1; i < s.size(); ++i) f *= s[i];
    return f;
  }

  ad::Var p(const std::string& name) {
    auto* param = params_.find(name);
    require(param != nullptr, ErrorCategory::invalid_argument, "model: missing parameter " + name);
    return tape_->parameter(*param);
  }

  ad::Var conv_relu_bn(ad::Tape<T>& tape, ad::Var x, const std::string& name, std::size_t pad, ad::Mode mode) {
    auto y = ad::conv2d(tape, x, p(name + ".weight"), p(name + ".bias"), pad, name);
    y = ad::relu(tape, y, name + ".relu");
    return ad::batchnorm2d(tape, y, p(name + ".bn.gamma"), p(name + ".bn.beta"),
                           *params_.find(name + ".bn.running_mean"), *params_.find(name + ".bn.running_var"), mode,
                           {}, name + ".bn");
  }

  ad::Var stage(ad::Tape<T>& tape, ad::Var x, const std::string& name, ad::Mode mode) {
    x = conv_relu_bn(tape, x, name + ".conv1", 1, mode);
    return conv_relu_bn(tape, x, name + ".conv2", 1, mode);
  }

  ad::Var attention(ad::Tape<T>& tape, ad::Var x, const std::string& name, ForwardTrace* trace) {
    if (!cfg_.has_attention()) return x;
    AttentionVars v;
    if (cfg_.attention.frequency) {
      v.w_conv = p(name + ".W_conv");
      v.b_conv = p(name + ".b_conv");
    }
    if (cfg_.attention.channel) v.w_fc = p(name + ".W_fc");
    AttentionMaps maps;
    auto y = attention_block(tape, x, cfg_.attention, v, name, &maps);
    if (trace) {
      trace->labels.push_back(name);
      trace->maps.push_back(maps);
    }
    return y;
  }

  ModelConfig cfg_;
  ad::ParameterStore<T> params_;
  ad::Tape<T>* tape_ = nullptr;
};

template <class T = float>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model<T> m(cfg);
  m.initialize(seed);
  return m;
}

/// Number of trainable scalars.
template <class T>
std::size_t count_params(const Model<T>& m) {
  return m.params().trainable_count();
}

/// Trainable scalars belonging to attention blocks.
template <class T>
std::size_t count_attention_params(const Model<T>& m) {
  std::size_t n = 0;
  for (const auto& p : m.params())
    if (p.trainable && p.name.rfind("att_", 0) == 0) n += p.value.numel();
  return n;
}

}  // namespace acnn
