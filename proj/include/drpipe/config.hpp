#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "drpipe/head.hpp"
#include "drpipe/manifest.hpp"
#include "drpipe/preprocess.hpp"

namespace drpipe {

struct BackboneConfig {
  enum class Kind { mock, pretrained_inception_v3 } kind = Kind::mock;
  int mock_dim = 64;
  std::optional<std::uint64_t> mock_seed;  // defaults to the pipeline seed
  std::filesystem::path weights_path;
  std::string weights_sha256;
  std::string weights_url;
  std::string runner;  // inference runner command for the pretrained kind
};

/// Everything a run needs, from one declarative config file. The single
/// top-level seed feeds every seeded stage through documented substreams.
struct PipelineConfig {
  std::filesystem::path data_root = ".";
  std::filesystem::path labels_csv = "labels.csv";
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  SplitSpec split;  // .seed is overwritten from `seed` when the stage runs
  PreprocessConfig preprocess;
  BackboneConfig backbone;
  TrainConfig train;  // .seed likewise
};

/// Flat "key = value" text, full-line # comments, dotted section prefixes
/// (e.g. "train.eta_max = 0.0005"). Unknown keys are rejected. Relative
/// paths resolve against the config file's directory; the DRPIPE_DATA_ROOT
/// environment variable overrides data.root.
PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override = {},
                                    std::optional<std::filesystem::path> output_dir_override = {});

/// The parsed key set with defaults applied, for diagnostics and docs.
std::map<std::string, std::string> default_config_keys();

}  // namespace drpipe
