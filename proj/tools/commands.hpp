#pragma once

#include "common.hpp"

namespace acnn::cli {

void cmd_gen_data(RunConfig& cfg);
void cmd_make_mask(RunConfig& cfg);
void cmd_train(RunConfig& cfg);
void cmd_reconstruct(RunConfig& cfg);
void cmd_evaluate(RunConfig& cfg);
void cmd_viz(RunConfig& cfg);
void cmd_ablate(RunConfig& cfg);

/// Training run shared by `train` and `ablate`: loads the split, trains, and
/// writes model.ackp, loss.csv and mask.msk1 (when drawn from the seed) to `out`.
struct TrainedModel {
  Model<float> model;
  TrainResult result;
  double seconds = 0.0;
};
TrainedModel train_to_directory(RunConfig& cfg, const std::filesystem::path& out);

}  // namespace acnn::cli
