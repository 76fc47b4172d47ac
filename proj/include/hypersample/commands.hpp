#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypersample/trainer.hpp"

namespace hypersample {

/// JSON run configuration: every TrainConfig field by name plus `dataset`
/// (resolved against the config file's directory), `output_dir`, `seeds`
/// and `rha_ablation_ratio` for ablations. `split` is [train, val, test].
struct RunConfigFile {
  TrainConfig train;
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double rha_ablation_ratio = 1.0;
};

/// Unknown keys and ill-typed values raise ValidationError naming the key;
/// malformed JSON raises ParseError with a line number.
RunConfigFile parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfigFile load_run_config(const std::filesystem::path& path);

/// Generator settings file: SyntheticConfig fields by name plus optional
/// "feature_storage": "inline" | "binary".
struct GenerateSpec {
  SyntheticConfig synthetic;
  FeatureStorage storage = FeatureStorage::inline_json;
};
GenerateSpec parse_generate_spec(std::string_view text);

/// Trains and writes metrics.jsonl, timing.jsonl, model.hsmp, policy.hsmp
/// (adaptive mode) and summary.json into `out_dir`.
TrainResult run_train(const Hypergraph& h, const TrainConfig& cfg, const std::filesystem::path& out_dir);

/// Epoch with the highest validation accuracy, earliest on ties.
std::size_t best_val_epoch(const std::vector<EpochMetrics>& metrics);

void run_generate(const std::filesystem::path& spec, const std::filesystem::path& out, std::uint64_t seed);

struct EvalReport {
  std::string split;
  double accuracy = 0.0;
  std::size_t nodes = 0;
};
EvalReport run_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data, std::string_view split,
                    const std::optional<std::filesystem::path>& config);
std::string to_json(const EvalReport& r);

struct AblationRun {
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;  // at the best validation epoch
  double final_test_accuracy = 0.0;
  double mean_epoch_time_s = 0.0;
  double wall_time_s = 0.0;  // whole run including MLP pretraining
  std::vector<EpochMetrics> metrics;
};

struct AblationRow {
  std::string name;
  std::vector<AblationRun> runs;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double epoch_time_s = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // Rdm-GCN, Ada-GCN, Ada-GCN+RHA
};

/// Runs the three ablation rows over every seed. Runs go to
/// `<out>/runs/<row>/seed_<s>/`; the table goes to ablation.json and
/// ablation.md. HYPERSAMPLE_THREADS caps concurrent runs.
AblationResult run_ablate(const RunConfigFile& cfg, const std::filesystem::path& out_dir);

std::size_t thread_budget();

}  // namespace hypersample
