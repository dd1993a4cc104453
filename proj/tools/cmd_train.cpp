#include <chrono>
#include <cstdio>
#include <sstream>

#include "commands.hpp"

namespace acnn::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string loss_table(const TrainResult& r) {
  std::ostringstream o;
  o << "epoch,lr,train_objective,validation_objective\n";
  for (const auto& e : r.trace)
    o << e.epoch << "," << format_double(e.lr) << "," << format_double(e.train_loss) << ","
      << (std::isnan(e.val_loss) ? std::string() : format_double(e.val_loss)) << "\n";
  return o.str();
}

}  // namespace

TrainedModel train_to_directory(RunConfig& cfg, const std::filesystem::path& out) {
  const auto corpus = load_corpus(cfg);
  require(!corpus.split.train.empty(), ErrorCategory::invalid_argument, "split manifest has no training volumes");
  const auto train_vols = load_volumes(corpus, corpus.split.train);
  const std::size_t size = train_vols[0].height();
  require(train_vols[0].width() == size, ErrorCategory::shape_mismatch,
          "training needs square planes, got " + train_vols[0].shape_string());
  const auto mcfg = model_config_from(cfg, train_vols[0].n_coils(), size);
  const auto val_vols = load_volumes(corpus, corpus.split.validation);

  auto sampling = sampling_from(cfg, size);
  if (sampling.kind == SamplingKind::cartesian && cfg.empty("mask")) {
    write_mask(out / "mask.msk1", sampling.mask);
    cfg.set("mask", (out / "mask.msk1").string());
  }
  const auto train_set =
      build_samples(mcfg, train_vols, std::span<const ComplexVolume>(network_inputs(corpus, corpus.split.train, train_vols, sampling)));
  SampleSet val_set;
  if (!val_vols.empty())
    val_set = build_samples(mcfg, val_vols,
                            std::span<const ComplexVolume>(network_inputs(corpus, corpus.split.validation, val_vols, sampling)));

  TrainedModel run{build_model<float>(mcfg, cfg.u64("seed")), {}, 0.0};
  const auto opt = train_options_from(cfg);
  std::printf("training %s (%zu slices, %zu coils, %zux%zu, %zu parameters) on %zu samples\n", std::string(model_kind_name(mcfg.kind)).c_str(),
              mcfg.n_slices, mcfg.n_coils, size, size, count_params(run.model), train_set.size());
  const auto t0 = Clock::now();
  run.result = train(run.model, train_set, val_set.size() > 0 ? &val_set : nullptr, opt, [&](const EpochRecord& e) {
    std::printf("epoch %zu/%zu lr %.3g train %.6g validation %.6g (%.0fs)\n", e.epoch + 1, opt.epochs, e.lr,
                e.train_loss, e.val_loss, seconds_since(t0));
    std::fflush(stdout);
  });
  run.seconds = seconds_since(t0);
  save_checkpoint(out / "model.ackp", run.model, cfg.u64("seed"), static_cast<std::uint32_t>(run.result.epochs_completed));
  io::write_text(out / "loss.csv", loss_table(run.result));
  return run;
}

void cmd_train(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  auto run = train_to_directory(cfg, out);
  cfg.save(out, "train");
  if (run.result.diverged)
    fail(ErrorCategory::training_diverged,
         run.result.message + "; kept the epoch-" + std::to_string(run.result.epochs_completed) + " checkpoint");
  std::printf("wrote %s (%.1fs)\n", (out / "model.ackp").string().c_str(), run.seconds);
}

void cmd_ablate(RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  const auto counts = cfg.count_list("slices");
  require(!counts.empty(), ErrorCategory::invalid_argument, "slices: empty list");
  const auto corpus = load_corpus(cfg);
  require(!corpus.split.test.empty(), ErrorCategory::invalid_argument, "split manifest has no test volumes");
  const auto test_vols = load_volumes(corpus, corpus.split.test);
  for (auto n : counts) {
    require(n % 2 == 1, ErrorCategory::invalid_argument, "slices: " + std::to_string(n) + " is not odd (2s+1)");
    require(n <= test_vols[0].n_slices(), ErrorCategory::invalid_argument,
            "slices: " + std::to_string(n) + " input slices exceed the " + std::to_string(test_vols[0].n_slices()) +
                " slices per volume");
  }

  MetricsReport report;
  std::vector<double> train_seconds, test_seconds;
  std::vector<Image> truth;
  for (const auto& v : test_vols)
    for (auto& im : rss_images(v)) truth.push_back(std::move(im));

  for (auto n : counts) {
    RunConfig run_cfg = cfg;
    run_cfg.set("s", std::to_string(n / 2));
    const auto dir = out / ("slices_" + std::to_string(n));
    auto run = train_to_directory(run_cfg, dir);
    run_cfg.save(dir, "train");
    require(!run.result.diverged, ErrorCategory::training_diverged, run.result.message);

    const auto sampling = sampling_from(run_cfg, test_vols[0].height());
    const auto inputs = network_inputs(corpus, corpus.split.test, test_vols, sampling);
    std::vector<Image> recon;
    const auto t0 = Clock::now();
    for (const auto& u : inputs)
      for (auto& im : reconstruct(run.model, u)) recon.push_back(std::move(im));
    test_seconds.push_back(seconds_since(t0) / static_cast<double>(recon.size()));
    train_seconds.push_back(run.seconds);
    report.methods.push_back(score("slices=" + std::to_string(n), recon, truth));
  }

  std::ostringstream table;
  table << "slices,s,ssim_mean,ssim_std,nmse_mean,nmse_std,psnr_mean,psnr_std,ssim_delta,nmse_delta,psnr_delta,"
           "ssim_p,nmse_p,psnr_p,train_seconds,test_seconds_per_case\n";
  auto stat = [&](std::size_t i, Metric m) { return mean_std(column(report.methods[i], m)); };
  for (std::size_t i = 0; i < counts.size(); ++i) {
    table << counts[i] << "," << counts[i] / 2;
    for (Metric m : {Metric::ssim, Metric::nmse, Metric::psnr})
      table << "," << format_double(stat(i, m).mean) << "," << format_double(stat(i, m).std);
    for (Metric m : {Metric::ssim, Metric::nmse, Metric::psnr})
      table << "," << format_double(stat(i, m).mean - stat(0, m).mean);
    for (Metric m : {Metric::ssim, Metric::nmse, Metric::psnr})
      table << "," << (i == 0 ? std::string("-") : format_double(report.p_value(i, m)));
    table << "," << format_double(train_seconds[i]) << "," << format_double(test_seconds[i]) << "\n";
  }
  io::write_text(out / "ablate.csv", table.str());
  io::write_text(out / "metrics.csv", report.format());
  cfg.save(out, "ablate");
  std::fputs(table.str().c_str(), stdout);
}

}  // namespace acnn::cli
