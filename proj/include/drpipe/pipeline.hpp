#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "drpipe/backbone.hpp"
#include "drpipe/config.hpp"

namespace drpipe {

// Artifact locations inside the output directory.
std::filesystem::path split_manifest_path(const PipelineConfig& cfg);
std::filesystem::path processed_dir(const PipelineConfig& cfg);
std::filesystem::path skip_report_path(const PipelineConfig& cfg);
std::filesystem::path feature_cache_path(const PipelineConfig& cfg);
std::filesystem::path head_checkpoint_path(const PipelineConfig& cfg);
std::filesystem::path train_history_path(const PipelineConfig& cfg);
std::filesystem::path report_path(const PipelineConfig& cfg);
std::filesystem::path report_table_path(const PipelineConfig& cfg);

struct PreprocessOutcome {
  std::size_t attempted = 0;
  std::size_t processed = 0;
  std::vector<std::pair<std::string, std::string>> skipped;  // (id, reason)

  /// Failure budget: anything above 1% of the manifest is a stage failure.
  bool over_failure_budget() const {
    return skipped.size() * 100 > attempted;
  }
};

/// Backbone handle per the config (mock or pretrained-via-runner).
std::unique_ptr<Backbone> open_backbone(const PipelineConfig& cfg);

/// The fingerprint open_backbone() would report, computed without starting
/// any inference runner (used for cheap cache-validity checks).
std::string expected_backbone_fingerprint(const PipelineConfig& cfg);

void run_split(const PipelineConfig& cfg);
PreprocessOutcome run_preprocess(const PipelineConfig& cfg);
void run_extract(const PipelineConfig& cfg);
void run_train(const PipelineConfig& cfg);
void run_evaluate(const PipelineConfig& cfg);
void run_fetch_weights(const PipelineConfig& cfg);

/// Streams `url` into `dest` and verifies the pinned digest; on mismatch the
/// partial download is removed and IntegrityError is thrown.
void download_to_file(const std::string& url, const std::filesystem::path& dest,
                      const std::string& sha256_hex);

/// split -> preprocess -> extract -> train -> evaluate.
void run_all(const PipelineConfig& cfg);

}  // namespace drpipe
