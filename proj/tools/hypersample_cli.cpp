#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hypersample/commands.hpp"
#include "hypersample/error.hpp"

namespace hs = hypersample;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigFailure = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypergraph node classification with adaptive layer-wise sampling"};
  app.require_subcommand(1);

  std::string train_config, train_out;
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_option("--out", train_out, "Output directory (overrides output_dir)");

  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "Write a synthetic hypergraph");
  generate->add_option("--spec", gen_spec, "Generator spec JSON")->required();
  generate->add_option("--out", gen_out, "Output hypergraph JSON")->required();
  generate->add_option("--seed", gen_seed, "Generator seed");

  std::string eval_ckpt, eval_data, eval_split = "test", eval_config;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and print accuracy as JSON");
  eval->add_option("--checkpoint", eval_ckpt, "model.hsmp")->required();
  eval->add_option("--data", eval_data, "Hypergraph JSON")->required();
  eval->add_option("--split", eval_split, "train, val or test");
  eval->add_option("--config", eval_config, "Run config used for training (split seed, ratios, augmentation)");

  std::string ablate_config, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Run the Rdm/Ada/Ada+RHA comparison over seeds");
  ablate->add_option("--config", ablate_config, "Run config JSON")->required();
  ablate->add_option("--out", ablate_out, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*train) {
      const hs::RunConfigFile cfg = hs::load_run_config(train_config);
      if (cfg.dataset.empty()) throw hs::ValidationError("config key \"dataset\" is required");
      const std::filesystem::path out = !train_out.empty() ? std::filesystem::path(train_out) : cfg.output_dir;
      if (out.empty()) throw hs::ValidationError("no output directory: pass --out or set output_dir");
      const hs::TrainResult res = hs::run_train(hs::load_hypergraph(cfg.dataset), cfg.train, out);
      if (!res.metrics.empty()) {
        std::cout << "final val " << res.metrics.back().val_accuracy << " test " << res.metrics.back().test_accuracy
                  << "\n";
      }
    } else if (*generate) {
      hs::run_generate(gen_spec, gen_out, gen_seed);
    } else if (*eval) {
      std::optional<std::filesystem::path> cfg;
      if (!eval_config.empty()) cfg = eval_config;
      std::cout << hs::to_json(hs::run_eval(eval_ckpt, eval_data, eval_split, cfg)) << "\n";
    } else if (*ablate) {
      const hs::RunConfigFile cfg = hs::load_run_config(ablate_config);
      const std::filesystem::path out = !ablate_out.empty() ? std::filesystem::path(ablate_out) : cfg.output_dir;
      if (out.empty()) throw hs::ValidationError("no output directory: pass --out or set output_dir");
      const hs::AblationResult res = hs::run_ablate(cfg, out);
      for (const auto& row : res.rows) std::cout << row.name << " " << row.mean << " +- " << row.std << "\n";
    }
  } catch (const hs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const hs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return 0;
}
