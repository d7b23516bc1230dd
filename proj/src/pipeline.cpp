#include "drpipe/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include "drpipe/digest.hpp"
#include "drpipe/evaluate.hpp"
#include "drpipe/image_io.hpp"
#include "drpipe/strings.hpp"

namespace drpipe {
namespace {

constexpr const char* kPreprocessTextKey = "drpipe.preprocess";

void ensure_output_dir(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
}

SplitManifest load_manifest_or_missing(const PipelineConfig& cfg) {
  const auto path = split_manifest_path(cfg);
  if (!std::filesystem::exists(path))
    throw MissingPrerequisite("missing split manifest: " + path.string() + " (run `split` first)");
  return load_manifest(path);
}

/// Resolve an image id to a file under data_root, probing known extensions.
std::filesystem::path resolve_image_path(const PipelineConfig& cfg, const std::string& id) {
  static const char* exts[] = {".png", ".jpeg", ".jpg", ".PNG", ".JPEG", ".JPG"};
  for (const char* ext : exts) {
    const auto candidate = cfg.data_root / (id + ext);
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw IoError("no image file for id '" + id + "' under " + cfg.data_root.string());
}

std::set<std::string> read_skip_report(const PipelineConfig& cfg) {
  std::set<std::string> skipped;
  std::ifstream in(skip_report_path(cfg));
  if (!in) return skipped;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab != std::string::npos) skipped.insert(line.substr(0, tab));
  }
  return skipped;
}

/// Manifest entries of one split that have cached features, with the rows
/// assembled in manifest (canonical) order.
struct SplitFeatures {
  Eigen::MatrixXf features;
  std::vector<BinaryLabel> labels;
  std::vector<SeverityGrade> grades;
  std::vector<std::string> ids;
};

SplitFeatures gather_split_features(const SplitManifest& manifest, const FeatureCache& cache,
                                    const std::set<std::string>& skipped, SplitTag split) {
  std::vector<const SplitEntry*> rows;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    if (cache.records.count(e.id)) {
      rows.push_back(&e);
    } else if (!skipped.count(e.id)) {
      throw MissingPrerequisite("feature for id '" + e.id +
                                "' is neither cached nor in the skip report; run `extract`");
    }
  }
  if (rows.empty()) throw Error("no usable samples in the " + std::string(to_string(split)) + " split");

  SplitFeatures out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), cache.dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = cache.records.at(rows[i]->id).transpose();
    out.labels.push_back(rows[i]->label);
    out.grades.push_back(rows[i]->grade);
    out.ids.push_back(rows[i]->id);
  }
  return out;
}

}  // namespace

std::filesystem::path split_manifest_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "split_manifest.tsv";
}
std::filesystem::path processed_dir(const PipelineConfig& cfg) {
  return cfg.output_dir / "processed";
}
std::filesystem::path skip_report_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "preprocess_skips.txt";
}
std::filesystem::path feature_cache_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "features.ftrc";
}
std::filesystem::path head_checkpoint_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "head.ckpt";
}
std::filesystem::path train_history_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "train_history.tsv";
}
std::filesystem::path report_path(const PipelineConfig& cfg) { return cfg.output_dir / "report.txt"; }
std::filesystem::path report_table_path(const PipelineConfig& cfg) {
  return cfg.output_dir / "report_table.txt";
}

std::unique_ptr<Backbone> open_backbone(const PipelineConfig& cfg) {
  if (cfg.backbone.kind == BackboneConfig::Kind::mock)
    return mock_backbone(cfg.backbone.mock_seed.value_or(cfg.seed), cfg.backbone.mock_dim);
  WeightAsset asset;
  asset.path = cfg.backbone.weights_path;
  asset.sha256_hex = cfg.backbone.weights_sha256;
  asset.runner_command = cfg.backbone.runner;
  asset.expected_dim = 2048;
  return load_backbone(asset);
}

std::string expected_backbone_fingerprint(const PipelineConfig& cfg) {
  if (cfg.backbone.kind == BackboneConfig::Kind::mock)
    return MockBackbone(cfg.backbone.mock_seed.value_or(cfg.seed), cfg.backbone.mock_dim)
        .fingerprint();
  if (!std::filesystem::exists(cfg.backbone.weights_path))
    throw IntegrityError("weight asset missing: " + cfg.backbone.weights_path.string());
  return to_hex(sha256_file(cfg.backbone.weights_path));
}

void run_split(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  if (!std::filesystem::exists(cfg.labels_csv))
    throw IoError("labels CSV not found: " + cfg.labels_csv.string());

  const auto records = load_label_manifest(cfg.labels_csv);
  SplitSpec spec = cfg.split;
  spec.seed = cfg.seed;
  const SplitManifest manifest = stratified_subsample(records, spec);
  save_manifest(manifest, split_manifest_path(cfg));
  std::cerr << "[split] " << manifest.count(SplitTag::train) << " train / "
            << manifest.count(SplitTag::test) << " test entries, checksum "
            << manifest.checksum_hex << "\n";
}

PreprocessOutcome run_preprocess(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  const SplitManifest manifest = load_manifest_or_missing(cfg);
  std::filesystem::create_directories(processed_dir(cfg));
  const std::string digest = cfg.preprocess.digest_hex();

  PreprocessOutcome outcome;
  outcome.attempted = manifest.entries.size();
  for (const auto& entry : manifest.entries) {
    try {
      const auto src = resolve_image_path(cfg, entry.id);
      const LoadedImage raw = load_image(src);
      const Image8 processed = preprocess_image(raw.pixels, cfg.preprocess);
      save_png(processed_dir(cfg) / (entry.id + ".png"), processed,
               {{kPreprocessTextKey, digest}});
      ++outcome.processed;
    } catch (const AllBelowThreshold&) {
      outcome.skipped.emplace_back(entry.id, "all pixels below crop threshold");
    } catch (const Error& e) {
      outcome.skipped.emplace_back(entry.id, e.what());
    }
  }

  std::ofstream skip(skip_report_path(cfg), std::ios::binary);
  if (!skip) throw IoError("cannot write skip report");
  for (const auto& [id, reason] : outcome.skipped) skip << id << "\t" << reason << "\n";

  std::cerr << "[preprocess] " << outcome.processed << " processed, " << outcome.skipped.size()
            << " skipped\n";
  for (const auto& [id, reason] : outcome.skipped)
    std::cerr << "[preprocess] skipped " << id << ": " << reason << "\n";
  return outcome;
}

void run_extract(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  const SplitManifest manifest = load_manifest_or_missing(cfg);
  if (!std::filesystem::exists(processed_dir(cfg)))
    throw MissingPrerequisite("missing processed image directory: " +
                              processed_dir(cfg).string() + " (run `preprocess` first)");
  const std::set<std::string> skipped = read_skip_report(cfg);
  const std::string preprocess_digest = cfg.preprocess.digest_hex();
  const std::string fingerprint = expected_backbone_fingerprint(cfg);

  if (std::filesystem::exists(feature_cache_path(cfg))) {
    try {
      const FeatureCache existing = read_cache(feature_cache_path(cfg));
      validate_cache(existing, fingerprint, preprocess_digest);
      bool complete = true;
      for (const auto& entry : manifest.entries)
        if (!existing.records.count(entry.id) && !skipped.count(entry.id)) {
          complete = false;
          break;
        }
      if (complete) {
        std::cerr << "[extract] cache hit: " << existing.records.size()
                  << " feature vectors already present\n";
        return;
      }
    } catch (const StaleCache& e) {
      std::cerr << "[extract] stale cache, re-extracting: " << e.what() << "\n";
    }
  }

  const auto backbone = open_backbone(cfg);
  FeatureCache cache;
  cache.dim = backbone->feature_dim();
  cache.backbone_fingerprint = backbone->fingerprint();
  cache.preprocess_digest = preprocess_digest;

  constexpr std::size_t kBatch = 32;
  std::vector<Image8> batch;
  std::vector<std::string> batch_ids;
  auto flush = [&]() {
    if (batch.empty()) return;
    const Eigen::MatrixXf feats = backbone->extract(batch);
    for (std::size_t i = 0; i < batch_ids.size(); ++i)
      cache.records[batch_ids[i]] = feats.row(static_cast<Eigen::Index>(i));
    batch.clear();
    batch_ids.clear();
  };

  for (const auto& entry : manifest.entries) {
    if (skipped.count(entry.id)) continue;
    const auto png = processed_dir(cfg) / (entry.id + ".png");
    if (!std::filesystem::exists(png))
      throw MissingPrerequisite("missing processed image: " + png.string() +
                                " (run `preprocess` first)");
    LoadedImage img = load_image(png);
    const auto it = img.text.find(kPreprocessTextKey);
    if (it == img.text.end() || it->second != preprocess_digest)
      throw StaleCache("processed image " + png.string() +
                       " was produced with a different preprocess config; re-run `preprocess`");
    batch.push_back(std::move(img.pixels));
    batch_ids.push_back(entry.id);
    if (batch.size() == kBatch) flush();
  }
  flush();

  write_cache(cache, feature_cache_path(cfg));
  std::cerr << "[extract] wrote " << cache.records.size() << " feature vectors (dim "
            << cache.dim << ")\n";
}

void run_train(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  const SplitManifest manifest = load_manifest_or_missing(cfg);
  if (!std::filesystem::exists(feature_cache_path(cfg)))
    throw MissingPrerequisite("missing feature cache: " + feature_cache_path(cfg).string() +
                              " (run `extract` first)");
  const FeatureCache cache = read_cache(feature_cache_path(cfg));
  validate_cache(cache, expected_backbone_fingerprint(cfg), cfg.preprocess.digest_hex());

  const SplitFeatures train_set =
      gather_split_features(manifest, cache, read_skip_report(cfg), SplitTag::train);

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  auto [params, history] = train_head(train_set.features, train_set.labels, train_cfg);

  save_head(HeadCheckpoint{std::move(params), cache.backbone_fingerprint},
            head_checkpoint_path(cfg));
  save_history(history, train_history_path(cfg), cache.backbone_fingerprint, train_cfg);
  std::cerr << "[train] " << train_set.labels.size() << " samples, " << train_cfg.epochs
            << " epochs";
  if (!history.mean_loss.empty())
    std::cerr << ", final loss " << format_double(history.mean_loss.back()) << ", train accuracy "
              << format_double(history.train_accuracy.back());
  std::cerr << "\n";
}

void run_evaluate(const PipelineConfig& cfg) {
  ensure_output_dir(cfg);
  const SplitManifest manifest = load_manifest_or_missing(cfg);
  if (!std::filesystem::exists(feature_cache_path(cfg)))
    throw MissingPrerequisite("missing feature cache: " + feature_cache_path(cfg).string() +
                              " (run `extract` first)");
  if (!std::filesystem::exists(head_checkpoint_path(cfg)))
    throw MissingPrerequisite("missing head checkpoint: " + head_checkpoint_path(cfg).string() +
                              " (run `train` first)");

  const FeatureCache cache = read_cache(feature_cache_path(cfg));
  validate_cache(cache, expected_backbone_fingerprint(cfg), cfg.preprocess.digest_hex());
  const HeadCheckpoint head = load_head(head_checkpoint_path(cfg));
  if (head.backbone_fingerprint != cache.backbone_fingerprint)
    throw FingerprintMismatch(
        "head checkpoint was trained against different backbone weights; re-run `train`");

  const std::set<std::string> skipped = read_skip_report(cfg);
  const SplitFeatures test_set = gather_split_features(manifest, cache, skipped, SplitTag::test);

  const Predictions preds = predict(head.params, test_set.features);
  std::vector<double> losses;
  losses.reserve(test_set.labels.size());
  for (std::size_t i = 0; i < test_set.labels.size(); ++i) {
    const Eigen::Vector2d p = preds.probabilities.row(static_cast<Eigen::Index>(i)).cast<double>();
    Eigen::Vector2d t = Eigen::Vector2d::Zero();
    t[test_set.labels[i] == BinaryLabel::healthy ? kClassHealthy : kClassUnhealthy] = 1.0;
    losses.push_back(cosine_loss(p, t));
  }

  EvalReport report = metrics(confusion(preds.labels, test_set.labels), losses);
  report.per_severity_accuracy =
      per_severity_breakdown(preds.labels, test_set.labels, test_set.grades);
  report.train_size = manifest.count(SplitTag::train);
  report.eta_max = cfg.train.eta_max;
  report.schedule = to_string(cfg.train.schedule);
  report.split_checksum = manifest.checksum_hex;
  report.preprocess_digest = cache.preprocess_digest;
  report.backbone_fingerprint = cache.backbone_fingerprint;
  report.head_digest = to_hex(sha256_file(head_checkpoint_path(cfg)));

  {
    std::ofstream f(report_path(cfg), std::ios::binary);
    if (!f) throw IoError("cannot write report");
    f << render_report(report, ReportFormat::structured);
  }
  {
    std::ofstream f(report_table_path(cfg), std::ios::binary);
    if (!f) throw IoError("cannot write report table");
    f << render_report(report, ReportFormat::table);
  }
  std::cerr << "[evaluate] accuracy " << format_percent(report.accuracy) << ", mean loss "
            << format_percent(report.mean_loss) << " over " << test_set.labels.size()
            << " test samples\n";
}

void run_fetch_weights(const PipelineConfig& cfg) {
  const auto& bc = cfg.backbone;
  if (bc.weights_path.empty()) throw Error("backbone.weights_path is not configured");
  if (bc.weights_sha256.empty()) throw Error("backbone.weights_sha256 is not configured");

  if (std::filesystem::exists(bc.weights_path)) {
    const std::string actual = to_hex(sha256_file(bc.weights_path));
    if (actual == bc.weights_sha256) {
      std::cerr << "[fetch-weights] asset already present and verified\n";
      return;
    }
    throw IntegrityError("existing weight asset has digest " + actual + ", expected " +
                         bc.weights_sha256 + "; remove it to re-fetch");
  }
  if (bc.weights_url.empty()) throw Error("backbone.weights_url is not configured");

  download_to_file(bc.weights_url, bc.weights_path, bc.weights_sha256);
  std::cerr << "[fetch-weights] stored verified asset at " << bc.weights_path.string() << "\n";
}

void run_all(const PipelineConfig& cfg) {
  run_split(cfg);
  const PreprocessOutcome outcome = run_preprocess(cfg);
  if (outcome.over_failure_budget())
    throw IoError("preprocess failed for " + std::to_string(outcome.skipped.size()) + " of " +
                  std::to_string(outcome.attempted) + " images (over the 1% budget)");
  run_extract(cfg);
  run_train(cfg);
  run_evaluate(cfg);
}

}  // namespace drpipe
