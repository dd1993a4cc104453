#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "acnn/autodiff/adam.hpp"
#include "acnn/network/pipeline.hpp"

namespace acnn {

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

/// Per-epoch objective values, already per-pixel (the MSE divides by H*W once).
struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = std::nan("");
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  std::size_t epochs_completed = 0;
  bool diverged = false;
  std::string message;
};

/// Eval-mode objective averaged over samples.
inline double evaluate_loss(Model<float>& model, const SampleSet& set, std::size_t batch = 16) {
  require(set.size() > 0, ErrorCategory::invalid_argument, "evaluate_loss: empty sample set");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < set.size(); first += batch) {
    idx.clear();
    for (std::size_t i = first; i < std::min(set.size(), first + batch); ++i) idx.push_back(i);
    ad::Tape<float> tape;
    auto x = tape.input(gather(set.inputs, idx), false, "input");
    auto t = tape.input(gather(set.targets, idx), false, "target");
    auto loss = loss_graph(tape, model, x, t, ad::Mode::eval);
    total += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(set.size());
}

/// Adam minimization of the RSS-image MSE. A non-finite loss or gradient
/// restores the parameters of the last completed epoch and stops.
inline TrainResult train(Model<float>& model, const SampleSet& train_set, const SampleSet* val_set,
                         const TrainOptions& opt, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  require(train_set.size() > 0, ErrorCategory::invalid_argument, "train: empty training set");
  require(opt.epochs >= 1 && opt.batch_size >= 1, ErrorCategory::invalid_argument,
          "train: epochs and batch size must be positive");
  TrainResult result;
  ad::AdamState<float> adam;
  adam.weight_decay = opt.weight_decay;
  Rng rng(opt.seed ^ 0x5eed5eedULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto good = model.params().snapshot();

  for (std::size_t e = 0; e < opt.epochs; ++e) {
    adam.lr = ad::lr_schedule(e, opt.epochs, opt.lr_start, opt.lr_end);
    if (opt.shuffle) rng.shuffle(order);
    double sum = 0.0;
    try {
      for (std::size_t first = 0; first < order.size(); first += opt.batch_size) {
        const std::size_t last = std::min(order.size(), first + opt.batch_size);
        std::span<const std::size_t> idx(order.data() + first, last - first);
        ad::Tape<float> tape;
        auto x = tape.input(gather(train_set.inputs, idx), false, "input");
        auto t = tape.input(gather(train_set.targets, idx), false, "target");
        auto loss = loss_graph(tape, model, x, t, ad::Mode::train);
        const double l = tape.value(loss)[0];
        require(std::isfinite(l), ErrorCategory::training_diverged,
                "non-finite loss at epoch " + std::to_string(e) + ", sample offset " + std::to_string(first));
        model.params().zero_grad();
        tape.backward(loss);
        ad::adam_step(adam, model.params());
        sum += l * static_cast<double>(idx.size());
      }
    } catch (const Error& err) {
      if (err.category() != ErrorCategory::training_diverged) throw;
      model.params().restore(good);
      result.diverged = true;
      result.message = err.what();
      return result;
    }
    EpochRecord rec;
    rec.epoch = e;
    rec.lr = adam.lr;
    rec.train_loss = sum / static_cast<double>(train_set.size());
    if (val_set && val_set->size() > 0) rec.val_loss = evaluate_loss(model, *val_set, opt.batch_size);
    result.trace.push_back(rec);
    result.epochs_completed = e + 1;
    good = model.params().snapshot();
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace acnn
