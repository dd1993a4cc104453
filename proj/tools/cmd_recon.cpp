#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "png_writer.hpp"

namespace acnn::cli {

namespace {

ComplexVolume read_kspace_volume(const std::string& path) {
  require(!path.empty(), ErrorCategory::invalid_argument, "volume: no input volume given");
  auto v = read_volume(path);
  require(v.domain() == Domain::kspace, ErrorCategory::invalid_argument, path + ": expected a k-space volume");
  return v;
}

Checkpoint read_checkpoint(const RunConfig& cfg) {
  require(!cfg.empty("checkpoint"), ErrorCategory::invalid_argument, "checkpoint: no checkpoint given");
  return load_checkpoint(cfg.str("checkpoint"));
}

void check_compatible(const ModelConfig& m, const ComplexVolume& v) {
  require(v.n_coils() == m.n_coils && v.height() == m.input_size && v.width() == m.input_size,
          ErrorCategory::shape_mismatch,
          "checkpoint expects " + std::to_string(m.n_coils) + " coils of " + std::to_string(m.input_size) + "x" +
              std::to_string(m.input_size) + ", volume is " + v.shape_string());
}

double peak_of(const std::vector<Image>& ims) {
  double p = 0.0;
  for (const auto& im : ims) p = std::max(p, image_max(im));
  return p;
}

}  // namespace

void cmd_reconstruct(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  auto ck = read_checkpoint(cfg);
  const auto vol = read_kspace_volume(cfg.str("volume"));
  check_compatible(ck.model.config(), vol);
  const auto under = undersample(vol, sampling_from(cfg, vol.height()));
  const auto recon = reconstruct(ck.model, under);
  const auto zf = zero_filled(under);
  const auto stem = std::filesystem::path(cfg.str("volume")).stem().string();
  write_volume(out / (stem + ".recon.kspv"), images_to_volume(recon));
  write_volume(out / (stem + ".zf.kspv"), images_to_volume(zf));
  const std::size_t mid = vol.n_slices() / 2;
  const double peak = peak_of(zf);
  write_png_gray(out / (stem + ".recon.png"), vol.height(), vol.width(), to_gray(recon[mid], peak));
  write_png_gray(out / (stem + ".zf.png"), vol.height(), vol.width(), to_gray(zf[mid], peak));
  cfg.save(out, "reconstruct");
  std::printf("reconstructed %zu slices of %s into %s\n", recon.size(), cfg.str("volume").c_str(), out.string().c_str());
}

void cmd_evaluate(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  require(!cfg.empty("truth"), ErrorCategory::invalid_argument, "truth: no reference volume given");
  const auto truth = rss_images(read_volume(cfg.str("truth")));
  SsimOptions opt;
  if (cfg.count("ssim-window") > 0) {
    opt.windowed = true;
    opt.window = cfg.count("ssim-window");
  }
  MetricsReport report;
  for (const auto& item : cfg.str_list("methods")) {
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCategory::invalid_argument,
            "methods: expected name=path, got '" + item + "'");
    const auto images = rss_images(read_volume(item.substr(eq + 1)));
    report.methods.push_back(score(item.substr(0, eq), images, truth, opt));
  }
  require(!report.methods.empty(), ErrorCategory::invalid_argument, "methods: at least one name=path is required");
  if (!cfg.empty("reference")) {
    const auto it = std::find_if(report.methods.begin(), report.methods.end(),
                                 [&](const MethodMetrics& m) { return m.name == cfg.str("reference"); });
    require(it != report.methods.end(), ErrorCategory::invalid_argument,
            "reference: no method named '" + cfg.str("reference") + "'");
    report.reference = static_cast<std::size_t>(it - report.methods.begin());
  }
  const auto text = report.format();
  io::write_text(out / "metrics.csv", text);
  cfg.save(out, "evaluate");
  std::fputs(text.substr(text.find("\n# summary")).c_str(), stdout);
}

namespace {

void viz_attention(const RunConfig& cfg, const std::filesystem::path& out) {
  auto ck = read_checkpoint(cfg);
  const auto& mcfg = ck.model.config();
  require(mcfg.has_attention(), ErrorCategory::invalid_argument, "viz attention: checkpoint has no attention blocks");
  const auto vol = read_kspace_volume(cfg.str("volume"));
  check_compatible(mcfg, vol);
  const auto under = undersample(vol, sampling_from(cfg, vol.height()));
  const auto u = scaled(under, normalization_scale(under));
  const std::size_t slice = slice_from(cfg, vol.n_slices());
  ad::Tape<float> tape;
  auto x = tape.input(model_input(mcfg, u, slice), false, "input");
  ForwardTrace trace;
  ck.model.forward(tape, x, ad::Mode::eval, &trace);
  std::ostringstream index;
  index << "label,file,height,width,min,max\n";
  std::size_t written = 0;
  for (std::size_t i = 0; i < trace.maps.size(); ++i) {
    if (!trace.maps[i].frequency.valid()) continue;
    const auto& m = tape.value(trace.maps[i].frequency);
    const std::string file = trace.labels[i] + ".png";
    write_png_gray(out / file, m.h(), m.w(), unit_interval_to_gray(m.storage()));
    const auto [lo, hi] = std::minmax_element(m.storage().begin(), m.storage().end());
    index << trace.labels[i] << "," << file << "," << m.h() << "," << m.w() << "," << format_double(*lo) << ","
          << format_double(*hi) << "\n";
    ++written;
  }
  require(written > 0, ErrorCategory::invalid_argument, "viz attention: the frequency branch is disabled");
  io::write_text(out / "attention_maps.csv", index.str());
  std::printf("wrote %zu frequency-attention maps for slice %zu\n", written, slice);
}

void viz_response(const RunConfig& cfg, const std::filesystem::path& out) {
  auto ck = read_checkpoint(cfg);
  const auto& mcfg = ck.model.config();
  const auto vol = read_kspace_volume(cfg.str("volume"));
  check_compatible(mcfg, vol);
  const auto under = undersample(vol, sampling_from(cfg, vol.height()));
  const double scale = normalization_scale(under);
  const std::size_t slice = slice_from(cfg, vol.n_slices());
  const auto truth = rss_combine_all(ifft2c(scaled(vol.slice(slice), scale)))[0];
  ChannelTensor target = ChannelTensor::nchw(1, 1, truth.height, truth.width);
  for (std::size_t i = 0; i < truth.size(); ++i) target[i] = static_cast<float>(truth.pixels[i]);
  const auto raw = input_channel_response(ck.model, model_input(mcfg, scaled(under, scale), slice), target);
  // One group is the whole packed neighbourhood, so slices compare on one scale.
  const auto norm = normalize_per_group(raw, raw.size());
  std::ostringstream o;
  o << "channel,slice_offset,coil,part,response,normalized\n";
  const std::size_t per_slice = 2 * mcfg.n_coils;
  for (std::size_t c = 0; c < raw.size(); ++c) {
    const long offset = static_cast<long>(c / per_slice) - static_cast<long>(mcfg.s());
    o << c << "," << offset << "," << (c % per_slice) / 2 << "," << (c % 2 == 0 ? "re" : "im") << ","
      << format_double(raw[c]) << "," << format_double(norm[c]) << "\n";
  }
  io::write_text(out / "response.csv", o.str());
  std::printf("wrote channel responses of %zu input channels for slice %zu\n", raw.size(), slice);
}

void viz_difference(const RunConfig& cfg, const std::filesystem::path& out) {
  const auto vol = read_kspace_volume(cfg.str("volume"));
  const auto truth = rss_images(vol);
  std::vector<Image> recon;
  if (!cfg.empty("recon")) {
    recon = rss_images(read_volume(cfg.str("recon")));
  } else {
    auto ck = read_checkpoint(cfg);
    check_compatible(ck.model.config(), vol);
    recon = reconstruct(ck.model, undersample(vol, sampling_from(cfg, vol.height())));
  }
  require(recon.size() == truth.size() && recon[0].height == truth[0].height && recon[0].width == truth[0].width,
          ErrorCategory::shape_mismatch, "viz difference: reconstruction and reference volumes differ in shape");
  const std::size_t slice = slice_from(cfg, truth.size());
  const double gain = cfg.real("gain");
  require(gain > 0.0, ErrorCategory::invalid_argument, "gain must be positive");
  const double peak = image_max(truth[slice]);
  Image diff(truth[slice].height, truth[slice].width);
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff.pixels[i] = gain * std::abs(recon[slice].pixels[i] - truth[slice].pixels[i]);
  const auto h = diff.height, w = diff.width;
  write_png_gray(out / "difference.png", h, w, to_gray(diff, peak));
  write_png_gray(out / "reconstruction.png", h, w, to_gray(recon[slice], peak));
  write_png_gray(out / "reference.png", h, w, to_gray(truth[slice], peak));
  std::printf("wrote |recon - reference| x %g for slice %zu\n", gain, slice);
}

void viz_loss(const RunConfig& cfg, const std::filesystem::path& out) {
  require(!cfg.empty("loss"), ErrorCategory::invalid_argument, "viz loss: no loss.csv given");
  std::ifstream in(cfg.str("loss"));
  require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + cfg.str("loss"));
  std::string line;
  std::getline(in, line);
  require(line == "epoch,lr,train_objective,validation_objective", ErrorCategory::format,
          cfg.str("loss") + ": not a loss table written by train");
  std::vector<double> train, val;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f[4];
    for (auto& s : f) std::getline(ss, s, ',');
    try {
      train.push_back(std::stod(f[2]));
      val.push_back(f[3].empty() ? std::nan("") : std::stod(f[3]));
    } catch (const std::exception&) {
      fail(ErrorCategory::format, cfg.str("loss") + ": bad row '" + line + "'");
    }
  }
  require(!train.empty(), ErrorCategory::format, cfg.str("loss") + ": no epochs");

  // log10 objective against epoch; training curve white, validation grey.
  const std::size_t h = 200, w = 400, margin = 10;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* c : {&train, &val})
    for (double v : *c)
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
  require(std::isfinite(lo), ErrorCategory::numeric, "viz loss: no positive objective values");
  if (hi - lo < 1e-6) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<std::uint8_t> px(h * w, 0);
  auto plot = [&](const std::vector<double>& c, std::uint8_t shade) {
    for (std::size_t x = margin; x < w - margin; ++x) {
      const double t = static_cast<double>(x - margin) / static_cast<double>(w - 2 * margin - 1) *
                       static_cast<double>(c.size() - 1);
      const auto i = static_cast<std::size_t>(std::floor(t));
      const double a = t - static_cast<double>(i);
      const double v0 = c[i], v1 = c[std::min(i + 1, c.size() - 1)];
      if (!(v0 > 0.0) || !(v1 > 0.0)) continue;
      const double v = (1.0 - a) * std::log10(v0) + a * std::log10(v1);
      const double y = (hi - v) / (hi - lo) * static_cast<double>(h - 2 * margin - 1) + static_cast<double>(margin);
      px[static_cast<std::size_t>(std::lround(y)) * w + x] = shade;
    }
  };
  plot(val, 128);
  plot(train, 255);
  write_png_gray(out / "loss.png", h, w, px);
  std::ostringstream o;
  o << "epoch,train_objective,validation_objective\n";
  for (std::size_t e = 0; e < train.size(); ++e)
    o << e << "," << format_double(train[e]) << "," << (std::isnan(val[e]) ? std::string() : format_double(val[e]))
      << "\n";
  io::write_text(out / "loss_curve.csv", o.str());
  std::printf("wrote loss curve over %zu epochs\n", train.size());
}

}  // namespace

void cmd_viz(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  const auto& what = cfg.str("what");
  if (what == "attention") viz_attention(cfg, out);
  else if (what == "response") viz_response(cfg, out);
  else if (what == "difference") viz_difference(cfg, out);
  else if (what == "loss") viz_loss(cfg, out);
  else fail(ErrorCategory::invalid_argument, "what: unknown visualization '" + what + "' (attention|response|difference|loss)");
  cfg.save(out, "viz");
}

}  // namespace acnn::cli
