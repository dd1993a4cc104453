#include "commands.hpp"

namespace acnn::cli {

const std::vector<Verb>& verbs() {
  static const std::vector<Verb> table = {
      {"gen-data", "write synthetic multi-coil phantom k-space volumes (KSPV) and a split manifest",
       join({global_keys("data"),
             {{"slices", "8", "slices per volume"},
              {"coils", "2", "coils per volume"},
              {"size", "64", "plane height and width"},
              {"count", "12", "number of volumes"},
              {"ellipses", "6", "ellipses per phantom"},
              {"drift", "0.02", "per-slice geometric drift"},
              {"split-fractions", "0.75,0.05,0.2", "train,validation,test fractions"}}}),
       cmd_gen_data},
      {"make-mask", "write a Cartesian mask (MSK1 + PNG) or a radial trajectory (CSV + PNG)",
       join({global_keys("mask"), {{"size", "64", "plane height and width"}}, sampling_keys()}), cmd_make_mask},
      {"train", "train a model on the split's training volumes; writes model.ackp and loss.csv",
       join({global_keys("run"), training_keys(), model_keys(), sampling_keys()}), cmd_train},
      {"reconstruct", "reconstruct one k-space volume; writes RSS reconstruction and zero-filled volumes",
       join({global_keys("recon"),
             {{"checkpoint", "", "ACKP checkpoint"}, {"volume", "", "fully sampled KSPV k-space volume"}},
             sampling_keys()}),
       cmd_reconstruct},
      {"evaluate", "per-slice SSIM/NMSE/PSNR with mean, std and rank-sum p-values",
       join({global_keys("eval"),
             {{"truth", "", "reference volume (k-space or image KSPV)"},
              {"methods", "", "comma separated name=path list of reconstructed volumes"},
              {"reference", "", "method the p-values compare against; empty uses the first"},
              {"ssim-window", "0", "SSIM window side; 0 uses global image statistics"}}}),
       cmd_evaluate},
      {"viz", "attention maps, channel responses, difference images or loss curves",
       join({global_keys("viz"),
             {{"what", "", "attention|response|difference|loss"},
              {"checkpoint", "", "ACKP checkpoint"},
              {"volume", "", "fully sampled KSPV k-space volume"},
              {"recon", "", "reconstructed volume for difference; empty reconstructs with the checkpoint"},
              {"loss", "", "loss.csv written by train"},
              {"slice", "", "slice index; empty selects the middle slice"},
              {"gain", "5", "difference image amplification"}},
             sampling_keys()}),
       cmd_viz},
      {"ablate", "train and test one model per input slice count; reports metrics and wall-clock",
       join({global_keys("ablate"), training_keys(), model_keys(), sampling_keys(),
             {{"slices", "1,3", "input slice counts (odd, 2s+1), comma separated"}}}),
       cmd_ablate},
  };
  return table;
}

}  // namespace acnn::cli
