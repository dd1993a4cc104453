#pragma once

#include <string>
#include <string_view>

#include "acnn/autodiff/ops.hpp"

namespace acnn {

/// How the two attention branches are combined inside one block.
enum class AttentionMode : unsigned char {
  parallel = 0,                // Y = max(Y_c, Y_f)
  channel_then_frequency = 1,  // frequency attention applied to Y_c
  frequency_then_channel = 2,  // channel attention applied to Y_f
};

inline std::string_view attention_mode_name(AttentionMode m) {
  switch (m) {
    case AttentionMode::parallel: return "parallel";
    case AttentionMode::channel_then_frequency: return "cf";
    case AttentionMode::frequency_then_channel: return "fc";
  }
  return "?";
}

inline AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "parallel") return AttentionMode::parallel;
  if (s == "cf" || s == "channel_then_frequency") return AttentionMode::channel_then_frequency;
  if (s == "fc" || s == "frequency_then_channel") return AttentionMode::frequency_then_channel;
  fail(ErrorCategory::invalid_argument, "unknown attention mode '" + std::string(s) + "' (parallel|cf|fc)");
}

/// Attention block settings shared by every insertion point. Disabling a
/// branch removes its parameters; with both disabled no block is inserted.
struct AttentionBlockConfig {
  AttentionMode mode = AttentionMode::parallel;
  bool channel = true;
  bool frequency = true;

  bool enabled() const noexcept { return channel || frequency; }
};

/// Which branches survive an ablation: none|channel|frequency|both.
inline AttentionBlockConfig attention_ablation(std::string_view which, AttentionMode mode = AttentionMode::parallel) {
  if (which == "none") return {mode, false, false};
  if (which == "channel") return {mode, true, false};
  if (which == "frequency") return {mode, false, true};
  if (which == "both") return {mode, true, true};
  fail(ErrorCategory::invalid_argument, "unknown attention ablation '" + std::string(which) +
                                            "' (none|channel|frequency|both)");
}

template <class T>
struct AttentionOutput {
  ad::Var map;  // S_f (N,1,H,W) or S_c (N,C,1,1)
  ad::Var y;
};

/// S_f = sigmoid(conv1x1(X; W_conv, b)) collapsed to one channel; Y_f = S_f * X.
template <class T>
AttentionOutput<T> frequency_attention(ad::Tape<T>& tape, ad::Var x, ad::Var w_conv, ad::Var bias,
                                       const std::string& label) {
  const auto& W = tape.value(w_conv);
  ad::detail::check(W.rank() == 4 && W.dim(0) == 1 && W.dim(2) == 1 && W.dim(3) == 1, label,
                    "W_conv must be (1, C, 1, 1)");
  ad::detail::check(W.dim(1) == tape.value(x).c(), label,
                    "W_conv has " + std::to_string(W.dim(1)) + " channels, input has " +
                        std::to_string(tape.value(x).c()));
  auto logits = ad::conv2d(tape, x, w_conv, bias, 0, label + ".conv");
  auto s = ad::sigmoid(tape, logits, label + ".S_f");
  return {s, ad::mul_broadcast(tape, x, s, label + ".Y_f")};
}

/// S_c = sigmoid(W_fc |X|_1) with one L1 norm per channel; Y_c = S_c * X.
template <class T>
AttentionOutput<T> channel_attention(ad::Tape<T>& tape, ad::Var x, ad::Var w_fc, const std::string& label) {
  const auto& W = tape.value(w_fc);
  const std::size_t c = tape.value(x).c();
  ad::detail::check(W.rank() == 2 && W.dim(0) == c && W.dim(1) == c, label,
                    "W_fc must be " + std::to_string(c) + "x" + std::to_string(c) + ", got " +
                        shape_string(W.shape()));
  auto z = ad::l1_reduce_per_channel(tape, x, label + ".squeeze");
  auto logits = ad::linear(tape, z, w_fc, ad::Var{}, label + ".fc");
  auto s = ad::sigmoid(tape, logits, label + ".S_c");
  return {s, ad::mul_broadcast(tape, x, s, label + ".Y_c")};
}

/// Parameters of one block; invalid Vars mark disabled branches.
struct AttentionVars {
  ad::Var w_conv, b_conv, w_fc;
};

struct AttentionMaps {
  ad::Var frequency;  // invalid when the branch is disabled
  ad::Var channel;
};

template <class T>
ad::Var attention_block(ad::Tape<T>& tape, ad::Var x, const AttentionBlockConfig& cfg, const AttentionVars& p,
                        const std::string& label, AttentionMaps* maps = nullptr) {
  if (!cfg.enabled()) return x;
  AttentionMaps m;
  ad::Var y;
  if (cfg.channel && !cfg.frequency) {
    auto c = channel_attention(tape, x, p.w_fc, label + ".channel");
    m.channel = c.map;
    y = c.y;
  } else if (cfg.frequency && !cfg.channel) {
    auto f = frequency_attention(tape, x, p.w_conv, p.b_conv, label + ".frequency");
    m.frequency = f.map;
    y = f.y;
  } else if (cfg.mode == AttentionMode::parallel) {
    auto c = channel_attention(tape, x, p.w_fc, label + ".channel");
    auto f = frequency_attention(tape, x, p.w_conv, p.b_conv, label + ".frequency");
    m = {f.map, c.map};
    y = ad::elementwise_max(tape, c.y, f.y, label + ".maxout");
  } else if (cfg.mode == AttentionMode::channel_then_frequency) {
    auto c = channel_attention(tape, x, p.w_fc, label + ".channel");
    auto f = frequency_attention(tape, c.y, p.w_conv, p.b_conv, label + ".frequency");
    m = {f.map, c.map};
    y = f.y;
  } else {
    auto f = frequency_attention(tape, x, p.w_conv, p.b_conv, label + ".frequency");
    auto c = channel_attention(tape, f.y, p.w_fc, label + ".channel");
    m = {f.map, c.map};
    y = c.y;
  }
  if (maps) *maps = m;
  return y;
}

}  // namespace acnn
