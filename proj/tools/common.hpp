#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "acnn/acnn.hpp"
#include "run_config.hpp"

namespace acnn::cli {

/// A CLI verb: its key schema (flags and config-file keys share names) and action.
struct Verb {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  std::function<void(RunConfig&)> run;
};

const std::vector<Verb>& verbs();

// Key groups shared by several verbs.
std::vector<KeySpec> global_keys(const std::string& default_out);
std::vector<KeySpec> sampling_keys();
std::vector<KeySpec> model_keys();
std::vector<KeySpec> training_keys();
std::vector<KeySpec> join(std::initializer_list<std::vector<KeySpec>> groups);

/// Sampling operator for size x size planes. A Cartesian mask comes from the
/// `mask` file when set, otherwise it is drawn from `seed`.
Sampling sampling_from(const RunConfig& cfg, std::size_t size);

/// Model topology from the model keys, for planes of `size` and `n_coils` coils.
ModelConfig model_config_from(const RunConfig& cfg, std::size_t n_coils, std::size_t size);

TrainOptions train_options_from(const RunConfig& cfg);

struct Corpus {
  std::filesystem::path dir;
  DatasetSplit split;
};

/// Data directory plus its split manifest (`split` key, else <data>/split.txt).
Corpus load_corpus(const RunConfig& cfg);
std::vector<ComplexVolume> load_volumes(const Corpus& corpus, const std::vector<std::string>& ids);

/// Network-input k-space per volume. Radial inputs (degrid + regrid) are cached
/// as KSPV files under <data>/<cache tag>/ and reused when present.
std::vector<ComplexVolume> network_inputs(const Corpus& corpus, const std::vector<std::string>& ids,
                                          const std::vector<ComplexVolume>& volumes, const Sampling& sampling);

/// RSS magnitude per slice: k-space volumes are inverse transformed first.
std::vector<Image> rss_images(const ComplexVolume& v);

/// Real images stored as a one-coil image-domain KSPV volume.
ComplexVolume images_to_volume(const std::vector<Image>& images);

/// Slice index from the `slice` key; empty selects the middle slice.
std::size_t slice_from(const RunConfig& cfg, std::size_t n_slices);

std::string format_double(double v);

}  // namespace acnn::cli
