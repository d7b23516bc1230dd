#include "drpipe/config.hpp"

#include <cstdlib>
#include <fstream>

#include "drpipe/strings.hpp"

namespace drpipe {
namespace {

std::map<std::string, std::string> parse_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key(trim(sv.substr(0, eq)));
    const std::string value(trim(sv.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key at config line " + std::to_string(lineno));
    if (!kv.emplace(key, value).second)
      throw ParseError("duplicate config key '" + key + "' at line " + std::to_string(lineno));
  }
  return kv;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

int parse_int(const std::string& v, const std::string& key) {
  const std::uint64_t u = parse_u64(v);
  if (u > 0x7FFFFFFF) throw ParseError("value too large for " + key);
  return static_cast<int>(u);
}

}  // namespace

std::map<std::string, std::string> default_config_keys() {
  PipelineConfig d;
  return {
      {"data.root", d.data_root.string()},
      {"data.labels_csv", d.labels_csv.string()},
      {"output_dir", d.output_dir.string()},
      {"seed", std::to_string(d.seed)},
      {"split.train_healthy", std::to_string(d.split.train_healthy)},
      {"split.train_per_unhealthy_grade", std::to_string(d.split.train_per_unhealthy_grade)},
      {"split.test_healthy", std::to_string(d.split.test_healthy)},
      {"split.test_per_unhealthy_grade", std::to_string(d.split.test_per_unhealthy_grade)},
      {"preprocess.crop_threshold", std::to_string(d.preprocess.crop_threshold)},
      {"preprocess.target_size", std::to_string(d.preprocess.target_size)},
      {"preprocess.blur_sigma_fraction", format_double(d.preprocess.blur_sigma_fraction)},
      {"preprocess.gain_alpha", format_double(d.preprocess.gain_alpha)},
      {"preprocess.offset_gamma", std::to_string(d.preprocess.offset_gamma)},
      {"backbone.kind", "mock"},
      {"backbone.mock_dim", std::to_string(d.backbone.mock_dim)},
      {"backbone.mock_seed", ""},
      {"backbone.weights_path", ""},
      {"backbone.weights_sha256", ""},
      {"backbone.weights_url", ""},
      {"backbone.runner", ""},
      {"train.hidden_width", std::to_string(d.train.hidden_width)},
      {"train.epochs", std::to_string(d.train.epochs)},
      {"train.batch_size", std::to_string(d.train.batch_size)},
      {"train.eta_max", format_double(d.train.eta_max)},
      {"train.schedule", "linear_ascent"},
  };
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> seed_override,
                                    std::optional<std::filesystem::path> output_dir_override) {
  const auto kv = parse_key_value_file(path);
  const auto known = default_config_keys();
  for (const auto& [key, value] : kv)
    if (known.find(key) == known.end()) throw ParseError("unknown config key '" + key + "'");

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };

  PipelineConfig cfg;
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";

  if (auto v = get("data.root")) cfg.data_root = resolve(base, *v);
  else cfg.data_root = base;
  if (const char* env = std::getenv("DRPIPE_DATA_ROOT")) cfg.data_root = env;
  if (auto v = get("data.labels_csv")) cfg.labels_csv = resolve(base, *v);
  else cfg.labels_csv = cfg.data_root / "labels.csv";
  if (auto v = get("output_dir")) cfg.output_dir = resolve(base, *v);
  else cfg.output_dir = resolve(base, "out");

  if (auto v = get("seed")) cfg.seed = parse_u64(*v);
  if (seed_override) cfg.seed = *seed_override;
  if (output_dir_override) cfg.output_dir = *output_dir_override;

  if (auto v = get("split.train_healthy")) cfg.split.train_healthy = parse_u64(*v);
  if (auto v = get("split.train_per_unhealthy_grade"))
    cfg.split.train_per_unhealthy_grade = parse_u64(*v);
  if (auto v = get("split.test_healthy")) cfg.split.test_healthy = parse_u64(*v);
  if (auto v = get("split.test_per_unhealthy_grade"))
    cfg.split.test_per_unhealthy_grade = parse_u64(*v);

  if (auto v = get("preprocess.crop_threshold"))
    cfg.preprocess.crop_threshold = parse_int(*v, "preprocess.crop_threshold");
  if (auto v = get("preprocess.target_size"))
    cfg.preprocess.target_size = parse_int(*v, "preprocess.target_size");
  if (auto v = get("preprocess.blur_sigma_fraction"))
    cfg.preprocess.blur_sigma_fraction = parse_double(*v);
  if (auto v = get("preprocess.gain_alpha")) cfg.preprocess.gain_alpha = parse_double(*v);
  if (auto v = get("preprocess.offset_gamma"))
    cfg.preprocess.offset_gamma = parse_int(*v, "preprocess.offset_gamma");
  cfg.preprocess.validate();

  if (auto v = get("backbone.kind")) {
    if (*v == "mock")
      cfg.backbone.kind = BackboneConfig::Kind::mock;
    else if (*v == "pretrained_inception_v3")
      cfg.backbone.kind = BackboneConfig::Kind::pretrained_inception_v3;
    else
      throw ParseError("backbone.kind must be 'mock' or 'pretrained_inception_v3'");
  }
  if (auto v = get("backbone.mock_dim")) cfg.backbone.mock_dim = parse_int(*v, "backbone.mock_dim");
  if (auto v = get("backbone.mock_seed")) cfg.backbone.mock_seed = parse_u64(*v);
  if (auto v = get("backbone.weights_path")) cfg.backbone.weights_path = resolve(base, *v);
  if (auto v = get("backbone.weights_sha256")) cfg.backbone.weights_sha256 = *v;
  if (auto v = get("backbone.weights_url")) cfg.backbone.weights_url = *v;
  if (auto v = get("backbone.runner")) cfg.backbone.runner = *v;

  if (auto v = get("train.hidden_width"))
    cfg.train.hidden_width = parse_int(*v, "train.hidden_width");
  if (auto v = get("train.epochs")) cfg.train.epochs = parse_int(*v, "train.epochs");
  if (auto v = get("train.batch_size")) cfg.train.batch_size = parse_int(*v, "train.batch_size");
  if (auto v = get("train.eta_max")) cfg.train.eta_max = parse_double(*v);
  if (auto v = get("train.schedule")) {
    if (*v == "linear_ascent")
      cfg.train.schedule = TrainConfig::Schedule::linear_ascent;
    else if (*v == "constant")
      cfg.train.schedule = TrainConfig::Schedule::constant;
    else
      throw ParseError("train.schedule must be 'linear_ascent' or 'constant'");
  }
  cfg.train.validate();

  cfg.split.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

}  // namespace drpipe
