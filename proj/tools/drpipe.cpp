// drpipe: diabetic retinopathy screening pipeline.
//
// Usage: drpipe {fetch-weights|split|preprocess|extract|train|evaluate|run-all}
//               --config <path> [--seed N] [--output-dir P]
//
// Exit codes: 0 success, 1 internal error, 2 bad input, 3 missing
// prerequisite stage. Logs go to stderr, artifacts to the output directory.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "drpipe/pipeline.hpp"

namespace {

int dispatch(const std::string& command, const drpipe::PipelineConfig& cfg) {
  using namespace drpipe;
  if (command == "fetch-weights") {
    run_fetch_weights(cfg);
  } else if (command == "split") {
    run_split(cfg);
  } else if (command == "preprocess") {
    const PreprocessOutcome outcome = run_preprocess(cfg);
    if (outcome.over_failure_budget()) {
      std::cerr << "error: preprocess failed for " << outcome.skipped.size() << " of "
                << outcome.attempted << " images (over the 1% budget); see "
                << skip_report_path(cfg).string() << "\n";
      return 2;
    }
  } else if (command == "extract") {
    run_extract(cfg);
  } else if (command == "train") {
    run_train(cfg);
  } else if (command == "evaluate") {
    run_evaluate(cfg);
  } else {
    run_all(cfg);
  }
  return 0;
}

int exit_code_for(const drpipe::Error& e) {
  using namespace drpipe;
  if (dynamic_cast<const MissingPrerequisite*>(&e) || dynamic_cast<const StaleCache*>(&e) ||
      dynamic_cast<const FingerprintMismatch*>(&e))
    return 3;  // an earlier stage must (re)run first
  if (dynamic_cast<const NonFiniteError*>(&e)) return 1;  // divergence / corrupted numerics
  return 2;                                               // bad input
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fundus image screening pipeline: frozen backbone features + cosine-loss head"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> output_dir_override;

  const char* subcommands[] = {"fetch-weights", "split",    "preprocess", "extract",
                               "train",         "evaluate", "run-all"};
  const char* descriptions[] = {
      "download and digest-verify the backbone weight asset",
      "write the stratified train/test split manifest",
      "crop, resize and locally normalize every listed image",
      "run the frozen backbone over processed images into the feature cache",
      "train the classifier head on cached train features",
      "score the head on the test split and write the reports",
      "run every stage in order"};
  for (std::size_t i = 0; i < std::size(subcommands); ++i) {
    CLI::App* sub = app.add_subcommand(subcommands[i], descriptions[i]);
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--seed", seed_override, "override the top-level seed");
    sub->add_option("--output-dir", output_dir_override, "override the output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const drpipe::PipelineConfig cfg = drpipe::load_pipeline_config(
        config_path, seed_override,
        output_dir_override ? std::optional<std::filesystem::path>(*output_dir_override)
                            : std::nullopt);
    return dispatch(command, cfg);
  } catch (const drpipe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
