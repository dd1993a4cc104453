#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "acnn/acnn.hpp"
#include "oracles.hpp"

using namespace acnn;

namespace {

std::size_t acnn_params(std::size_t n_slices, std::size_t n_coils) {
  return count_params(Model<float>(ModelConfig::standard(ModelKind::acnn, n_slices / 2, n_coils)));
}

ComplexVolume phantom_kspace(std::size_t slices, std::size_t coils, std::size_t n, std::uint64_t seed) {
  PhantomSpec spec;
  spec.n_slices = slices;
  spec.n_coils = coils;
  spec.height = spec.width = n;
  spec.seed = seed;
  return fft2c(gen_phantom(spec));
}

ModelConfig small_config(ModelKind kind, std::size_t s, std::size_t coils, std::size_t size) {
  auto cfg = ModelConfig::toy(kind, kind == ModelKind::image_unet ? 0 : s, coils);
  cfg.input_size = size;
  return cfg;
}

double max_abs_diff(const std::vector<Image>& a, const std::vector<Image>& b, double* peak = nullptr) {
  double d = 0.0, p = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s)
    for (std::size_t i = 0; i < a[s].pixels.size(); ++i) {
      d = std::max(d, std::abs(a[s].pixels[i] - b[s].pixels[i]));
      p = std::max(p, std::abs(b[s].pixels[i]));
    }
  if (peak) *peak = p;
  return d;
}

double param_norm(const Model<float>& m) {
  double s = 0.0;
  for (const auto& p : m.params())
    if (p.trainable)
      for (float v : p.value.storage()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

Tensor<float> row(std::vector<float> v) {
  const std::size_t n = v.size();
  return Tensor<float>(Shape{1, 1, 1, n}, std::move(v));
}

}  // namespace

TEST(ParamCount, FirstAndOutputConvShapes) {
  for (std::size_t s : {0u, 1u, 2u})
    for (std::size_t n : {1u, 4u, 8u}) {
      const Model<float> m(small_config(ModelKind::acnn, s, n, 64));
      const auto& cfg = m.config();
      EXPECT_EQ(m.params().find("enc0.conv1.weight")->value.numel(), 2 * (2 * s + 1) * n * 16 * 9);
      EXPECT_EQ(m.params().find("output.weight")->value.numel(), cfg.final_hidden_width * 2 * n);
    }
  Model<float> m(ModelConfig::standard(ModelKind::acnn, 1, 8));
  EXPECT_EQ(m.params().find("enc0.conv1.weight")->value.numel(), 1152u * 3 * 8);
  EXPECT_EQ(m.params().find("output.weight")->value.numel(), 64u * 8);
}

TEST(ParamCount, CoilAndSliceSlopes) {
  EXPECT_EQ(acnn_params(1, 8) - acnn_params(1, 4), 1216u * 4);
  EXPECT_EQ(acnn_params(3, 8) - acnn_params(3, 4), 3520u * 4);
  EXPECT_EQ(acnn_params(3, 8) - acnn_params(1, 8), (3520u - 1216u) * 8);
  // general form: (1152 N_slice + 64) N_coil above a constant
  const std::size_t base = acnn_params(1, 1) - (1152 + 64);
  for (std::size_t slices : {1u, 3u, 5u})
    for (std::size_t coils : {1u, 2u, 3u}) EXPECT_EQ(acnn_params(slices, coils) - base, (1152 * slices + 64) * coils);
}

TEST(ParamCount, AttentionBlocksAtDefaultWidths) {
  std::size_t expected = 0;
  for (std::size_t c : {64u, 128u, 256u, 512u, 1024u, 512u, 256u, 128u}) expected += c * c + c + 1;
  EXPECT_EQ(expected, 1743688u);
  const Model<float> m(ModelConfig::standard(ModelKind::acnn, 0, 8));
  EXPECT_EQ(count_attention_params(m), expected);
  EXPECT_LT(std::abs(static_cast<double>(expected) - 1.75e6) / 1.75e6, 0.01);
  const Model<float> plain(ModelConfig::standard(ModelKind::kspace_unet, 0, 8));
  EXPECT_EQ(count_params(m) - count_params(plain), expected);
}

TEST(ParamCount, AttentionOnlyForAcnn) {
  auto cfg = ModelConfig::standard(ModelKind::kspace_unet, 0, 2);
  cfg.attention = {};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Attention, FrequencyExample) {
  ad::Tape<float> t;
  auto x = t.input(row({1.0f, -1.0f}));
  auto w = t.input(Tensor<float>(Shape{1, 1, 1, 1}, std::vector<float>{1.0f}));
  const auto out = frequency_attention(t, x, w, ad::Var{}, "f");
  EXPECT_NEAR(t.value(out.map)[0], 0.7311, 1e-4);
  EXPECT_NEAR(t.value(out.map)[1], 0.2689, 1e-4);
  EXPECT_NEAR(t.value(out.y)[0], 0.7311, 1e-4);
  EXPECT_NEAR(t.value(out.y)[1], -0.2689, 1e-4);
}

TEST(Attention, ZeroWeightsHalveTheInput) {
  ad::Tape<float> t;
  Tensor<float> xv = Tensor<float>::nchw(2, 3, 4, 4);
  Rng rng(4);
  for (auto& v : xv.storage()) v = static_cast<float>(rng.normal());
  auto x = t.input(xv);
  const auto f = frequency_attention(t, x, t.input(Tensor<float>::nchw(1, 3, 1, 1)), ad::Var{}, "f");
  const auto c = channel_attention(t, x, t.input(Tensor<float>(Shape{3, 3})), "c");
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    EXPECT_EQ(t.value(f.y)[i], 0.5f * xv[i]);
    EXPECT_EQ(t.value(c.y)[i], 0.5f * xv[i]);
  }
}

TEST(Attention, ChannelExample) {
  ad::Tape<float> t;
  Tensor<float> xv = Tensor<float>::nchw(1, 2, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) xv[i] = 1.0f;
  Tensor<float> w(Shape{2, 2});
  w[0] = w[3] = 1.0f;
  const auto c = channel_attention(t, t.input(xv), t.input(w), "c");
  EXPECT_NEAR(t.value(c.map)[0], 1.0 / (1.0 + std::exp(-4.0)), 1e-6);
  EXPECT_NEAR(t.value(c.map)[0], 0.9820, 1e-4);
  EXPECT_EQ(t.value(c.map)[1], 0.5f);
}

TEST(Attention, ChannelMapIgnoresSpatialPermutation) {
  Tensor<float> xv = Tensor<float>::nchw(1, 3, 4, 4), w(Shape{3, 3});
  Rng rng(8);
  for (auto& v : xv.storage()) v = static_cast<float>(rng.normal());
  for (auto& v : w.storage()) v = static_cast<float>(0.3 * rng.normal());
  Tensor<float> perm = xv;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    float* p = perm.data() + ch * 16;
    std::vector<float> tmp(p, p + 16);
    rng.shuffle(tmp);
    std::copy(tmp.begin(), tmp.end(), p);
  }
  ad::Tape<float> t;
  const auto a = channel_attention(t, t.input(xv), t.input(w), "a");
  const auto b = channel_attention(t, t.input(perm), t.input(w), "b");
  for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_NEAR(t.value(a.map)[ch], t.value(b.map)[ch], 1e-6);
}

TEST(Attention, MapsInsideUnitIntervalAndMaxOutDominates) {
  const std::size_t c = 4;
  ad::ParameterStore<float> ps;
  ps.add("w_conv", {1, c, 1, 1});
  ps.add("b_conv", {1});
  ps.add("w_fc", {c, c});
  // logits stay within a few units: float sigmoid rounds to exactly 1 above ~17
  Rng rng(13);
  for (auto& p : ps)
    for (auto& v : p.value.storage()) v = static_cast<float>(0.1 * rng.normal());
  Tensor<float> xv = Tensor<float>::nchw(2, c, 5, 5);
  for (auto& v : xv.storage()) v = static_cast<float>(3.0 * rng.normal());
  ad::Tape<float> t;
  auto x = t.input(xv);
  const AttentionVars vars{t.parameter(ps[0]), t.parameter(ps[1]), t.parameter(ps[2])};
  AttentionMaps maps;
  auto y = attention_block(t, x, AttentionBlockConfig{}, vars, "att", &maps);
  const auto yc = channel_attention(t, x, vars.w_fc, "c").y;
  const auto yf = frequency_attention(t, x, vars.w_conv, vars.b_conv, "f").y;
  for (float s : t.value(maps.frequency).storage()) {
    EXPECT_GT(s, 0.0f);
    EXPECT_LT(s, 1.0f);
  }
  for (float s : t.value(maps.channel).storage()) {
    EXPECT_GT(s, 0.0f);
    EXPECT_LT(s, 1.0f);
  }
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    EXPECT_GE(t.value(y)[i], t.value(yc)[i]);
    EXPECT_GE(t.value(y)[i], t.value(yf)[i]);
    EXPECT_EQ(t.value(y)[i], std::max(t.value(yc)[i], t.value(yf)[i]));
  }
}

TEST(Attention, ElementwiseMaxExample) {
  ad::Tape<float> t;
  auto y = ad::elementwise_max(t, t.input(row({1.0f, -2.0f})), t.input(row({0.0f, -1.0f})));
  EXPECT_EQ(t.value(y).storage(), (std::vector<float>{1.0f, -1.0f}));
}

TEST(Attention, AblationNames) {
  EXPECT_FALSE(attention_ablation("none").enabled());
  EXPECT_TRUE(attention_ablation("channel").channel);
  EXPECT_FALSE(attention_ablation("channel").frequency);
  EXPECT_TRUE(attention_ablation("both").frequency);
  EXPECT_THROW(attention_ablation("all"), Error);
  EXPECT_EQ(parse_attention_mode("cf"), AttentionMode::channel_then_frequency);
}

class ResidualIdentity : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ResidualIdentity, ZeroOutputLayerGivesZeroFilled) {
  const auto kind = GetParam();
  const auto full = phantom_kspace(4, 2, 16, 31);
  const auto under = apply_mask(full, make_cartesian_mask(16, 16, 4.0, 2));
  auto model = build_model(small_config(kind, 1, 2, 16), 5);
  // perturb every other parameter so only the output layer is zero
  Rng rng(6);
  for (auto& p : model.params())
    if (p.trainable)
      for (auto& v : p.value.storage()) v += static_cast<float>(0.05 * rng.normal());
  model.zero_output_layer();
  double peak = 0.0;
  const double d = max_abs_diff(reconstruct(model, under), zero_filled(under), &peak);
  EXPECT_LT(d, 1e-5 * peak);
}

TEST_P(ResidualIdentity, FullySampledInputGivesGroundTruth) {
  const auto kind = GetParam();
  const auto full = phantom_kspace(3, 2, 16, 32);
  auto model = build_model(small_config(kind, 1, 2, 16), 7);
  model.zero_output_layer();
  double peak = 0.0;
  const double d = max_abs_diff(reconstruct(model, full), rss_combine_all(ifft2c(full)), &peak);
  EXPECT_LT(d, 1e-5 * peak);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ResidualIdentity,
                         ::testing::Values(ModelKind::acnn, ModelKind::kspace_unet, ModelKind::image_unet),
                         [](const auto& info) { return std::string(model_kind_name(info.param)); });

TEST(Model, RejectsIndivisibleInput) {
  EXPECT_THROW(build_model(small_config(ModelKind::acnn, 1, 2, 12), 1), Error);
  auto model = build_model(small_config(ModelKind::acnn, 1, 2, 16), 1);
  ad::Tape<float> t;
  EXPECT_THROW(model.forward(t, t.input(Tensor<float>::nchw(1, 12, 12, 12)), ad::Mode::eval), Error);
  EXPECT_THROW(model.forward(t, t.input(Tensor<float>::nchw(1, 10, 16, 16)), ad::Mode::eval), Error);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  auto model = build_model(small_config(ModelKind::acnn, 1, 2, 16), 3);
  auto& rv = model.params().find("enc1.conv1.bn.running_var")->value;
  rv[0] = 2.5f;
  auto bytes = encode_checkpoint(model, 99, 7);
  io::Reader r(bytes, "mem");
  const auto ck = decode_checkpoint(r);
  EXPECT_EQ(ck.seed, 99u);
  EXPECT_EQ(ck.epoch, 7u);
  EXPECT_EQ(ck.model.config(), model.config());
  ASSERT_EQ(ck.model.params().size(), model.params().size());
  for (std::size_t k = 0; k < model.params().size(); ++k) {
    EXPECT_EQ(ck.model.params()[k].name, model.params()[k].name);
    EXPECT_EQ(ck.model.params()[k].value, model.params()[k].value);
  }

  const auto dir = std::filesystem::temp_directory_path() / "acnn_test_ckpt";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "m.ackp", model, 99, 7);
  EXPECT_EQ(load_checkpoint(dir / "m.ackp").model.params()[0].value, model.params()[0].value);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, CorruptFilesAreFormatErrors) {
  const auto model = build_model(small_config(ModelKind::kspace_unet, 0, 1, 8), 3);
  const auto good = encode_checkpoint(model, 1, 0);
  auto expect_format = [](std::vector<char> b) {
    io::Reader r(std::move(b), "bad");
    try {
      decode_checkpoint(r);
      ADD_FAILURE() << "accepted a corrupt checkpoint";
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::format) << e.what();
    }
  };
  auto magic = good;
  magic[0] = 'X';
  expect_format(magic);
  auto version = good;
  version[4] = 9;
  expect_format(version);
  expect_format(std::vector<char>(good.begin(), good.begin() + static_cast<long>(good.size() / 2)));
  expect_format(std::vector<char>(good.begin(), good.end() - 1));
  auto trailing = good;
  trailing.push_back(0);
  expect_format(trailing);
}

namespace {

SampleSet tiny_samples(std::uint64_t seed, bool zero) {
  auto full = phantom_kspace(4, 2, 16, seed);
  if (zero)
    for (auto& z : full.data()) z = 0.0f;
  const ComplexVolume vols[1] = {full};
  return build_samples(small_config(ModelKind::acnn, 1, 2, 16), vols,
                       Sampling::cartesian(make_cartesian_mask(16, 16, 4.0, seed)));
}

}  // namespace

TEST(Train, SameSeedGivesIdenticalTraces) {
  const auto set = tiny_samples(2, false);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 2;
  opt.lr_start = 1e-3;
  opt.lr_end = 1e-4;
  opt.seed = 4;
  auto run = [&] {
    auto m = build_model(small_config(ModelKind::acnn, 1, 2, 16), 4);
    return train(m, set, &set, opt).trace;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t e = 0; e < a.size(); ++e) {
    EXPECT_EQ(a[e].train_loss, b[e].train_loss);
    EXPECT_EQ(a[e].val_loss, b[e].val_loss);
    EXPECT_EQ(a[e].lr, b[e].lr);
  }
  EXPECT_DOUBLE_EQ(a.front().lr, 1e-3);
  EXPECT_NEAR(a.back().lr, 1e-4, 1e-15);
}

TEST(Train, DecayShrinksParametersOnZeroInput) {
  const auto set = tiny_samples(3, true);
  auto m = build_model(small_config(ModelKind::acnn, 1, 2, 16), 5);
  TrainOptions opt;
  opt.epochs = 4;
  opt.batch_size = 2;
  opt.weight_decay = 1e-4;
  double prev = param_norm(m);
  std::size_t calls = 0;
  train(m, set, nullptr, opt, [&](const EpochRecord& rec) {
    EXPECT_EQ(rec.train_loss, 0.0);
    const double now = param_norm(m);
    EXPECT_LT(now, prev) << "epoch " << rec.epoch;
    prev = now;
    ++calls;
  });
  EXPECT_EQ(calls, 4u);
}

TEST(Train, EmptySetRejected) {
  auto m = build_model(small_config(ModelKind::acnn, 1, 2, 16), 5);
  EXPECT_THROW(train(m, SampleSet{}, nullptr, TrainOptions{}), Error);
}

namespace {

// Loss in double for a float model, on a shadow copy of its parameters.
double loss_double(Model<double>& shadow, const Tensor<double>& x, const Tensor<double>& target) {
  ad::Tape<double> t;
  return t.value(loss_graph(t, shadow, t.input(x), t.input(target), ad::Mode::eval))[0];
}

}  // namespace

TEST(ChannelResponse, MatchesDirectionalDifferences) {
  const auto set = tiny_samples(9, false);
  auto m = build_model(small_config(ModelKind::acnn, 1, 2, 16), 11);
  Rng rng(12);
  for (auto& v : m.params().find("output.weight")->value.storage()) v = static_cast<float>(0.1 * rng.normal());
  const std::size_t idx[2] = {1, 2};
  const auto x = gather(set.inputs, idx), target = gather(set.targets, idx);
  const auto r = input_channel_response(m, x, target);
  ASSERT_EQ(r.size(), x.c());

  // the response is the derivative along sign(dL/dx) restricted to the channel
  ad::Tape<float> tape;
  auto xv = tape.input(x, true);
  tape.backward(loss_graph(tape, m, xv, tape.input(target), ad::Mode::eval));
  const auto& g = tape.grad(xv);
  Model<double> shadow(m.config());
  for (std::size_t k = 0; k < m.params().size(); ++k) shadow.params()[k].value = m.params()[k].value.cast<double>();
  const auto xd = x.cast<double>(), td = target.cast<double>();
  const std::size_t hw = x.h() * x.w(), c = x.c();
  double rmax = *std::max_element(r.begin(), r.end());
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (r[ch] < 1e-3 * rmax) continue;
    const double eps = 1e-4;
    auto shifted = [&](double step) {
      auto y = xd;
      for (std::size_t b = 0; b < x.n(); ++b)
        for (std::size_t i = 0; i < hw; ++i) {
          const float gi = g[(b * c + ch) * hw + i];
          y[(b * c + ch) * hw + i] += step * (gi > 0 ? 1.0 : gi < 0 ? -1.0 : 0.0);
        }
      return loss_double(shadow, y, td);
    };
    const double fd = (shifted(eps) - shifted(-eps)) / (2 * eps);
    EXPECT_NEAR(fd, r[ch], 0.05 * r[ch]) << "channel " << ch;
  }
}

TEST(ChannelResponse, ZeroNetworkSeesOnlyTheCentreSlice) {
  auto full = phantom_kspace(3, 2, 16, 14);
  // coil 1 duplicates coil 0 in every slice
  for (std::size_t s = 0; s < 3; ++s) {
    auto c0 = full.plane(s, 0);
    auto c1 = full.plane(s, 1);
    std::copy(c0.begin(), c0.end(), c1.begin());
  }
  const ComplexVolume vols[1] = {full};
  const auto cfg = small_config(ModelKind::acnn, 1, 2, 16);
  const auto set = build_samples(cfg, vols, Sampling::cartesian(make_cartesian_mask(16, 16, 4.0, 1)));
  auto m = build_model(cfg, 3);
  m.zero_output_layer();
  const std::size_t idx[1] = {1};
  const auto r = input_channel_response(m, gather(set.inputs, idx), gather(set.targets, idx));
  ASSERT_EQ(r.size(), 12u);
  for (std::size_t ch = 0; ch < 4; ++ch) {
    EXPECT_EQ(r[ch], 0.0) << ch;
    EXPECT_EQ(r[8 + ch], 0.0) << ch;
  }
  EXPECT_GT(r[4], 0.0);
  EXPECT_NEAR(r[4], r[6], 1e-6 * r[4]);
  EXPECT_NEAR(r[5], r[7], 1e-6 * std::max(r[5], r[4]));
}

TEST(ChannelResponse, NormalizationPerGroup) {
  const auto r = normalize_per_group({1.0, 4.0, 2.0, 0.5, 0.25, 0.0}, 3);
  EXPECT_EQ(r, (std::vector<double>{0.25, 1.0, 0.5, 1.0, 0.5, 0.0}));
  const auto z = normalize_per_group({0.0, 0.0}, 2);
  EXPECT_EQ(z, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(normalize_per_group({1.0, 2.0, 3.0}, 2), Error);
}
