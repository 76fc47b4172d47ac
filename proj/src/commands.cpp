#include "hypersample/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "hypersample/error.hpp"
#include "hypersample/rng.hpp"

namespace hypersample {
namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::size_t best_val_epoch(const std::vector<EpochMetrics>& metrics) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i)
    if (metrics[i].val_accuracy > metrics[best].val_accuracy) best = i;
  return best;
}

TrainResult run_train(const Hypergraph& h, const TrainConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream metrics = open_out(out_dir / "metrics.jsonl");
  TrainResult res = train(h, cfg, [&](const EpochMetrics& m) { metrics << to_json_line(m) << '\n'; });
  metrics.close();
  if (!metrics) throw Error("failed writing metrics.jsonl");

  std::ofstream timing = open_out(out_dir / "timing.jsonl");
  for (std::size_t e = 0; e < res.epoch_seconds.size(); ++e) {
    ordered_json j;
    j["epoch"] = e;
    j["epoch_time_s"] = res.epoch_seconds[e];
    timing << j.dump() << '\n';
  }

  save_checkpoint(res.model, out_dir / "model.hsmp");
  if (cfg.mode == SamplerMode::adaptive) save_checkpoint(res.policy.net, out_dir / "policy.hsmp");

  ordered_json s;
  s["epochs"] = res.metrics.size();
  s["mode"] = std::string(to_string(cfg.mode));
  s["seed"] = cfg.seed;
  if (!res.metrics.empty()) {
    const std::size_t best = best_val_epoch(res.metrics);
    s["final_val_accuracy"] = res.metrics.back().val_accuracy;
    s["final_test_accuracy"] = res.metrics.back().test_accuracy;
    s["best_val_epoch"] = best;
    s["best_val_accuracy"] = res.metrics[best].val_accuracy;
    s["test_accuracy_at_best_val"] = res.metrics[best].test_accuracy;
  }
  s["mlp_val_accuracy"] = res.mlp_val_accuracy;
  if (res.log_z) s["log_z"] = *res.log_z;
  s["wall_time_s"] = res.wall_time_s;
  s["peak_resident_mb"] = peak_resident_mb();
  open_out(out_dir / "summary.json") << s.dump(2) << '\n';
  return res;
}

void run_generate(const std::filesystem::path& spec, const std::filesystem::path& out, std::uint64_t seed) {
  const GenerateSpec g = parse_generate_spec(read_text(spec));
  const Hypergraph h = generate_synthetic(g.synthetic, seed);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  save_hypergraph(h, out, g.storage);
}

EvalReport run_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data, std::string_view split,
                    const std::optional<std::filesystem::path>& config) {
  TrainConfig cfg;
  if (config) cfg = load_run_config(*config).train;
  const Hypergraph h = load_hypergraph(data);
  const ModelParams model = load_checkpoint(checkpoint);
  const auto schema = model.schema();
  if (schema.front() != h.feature_dim() || schema.back() != h.num_classes()) {
    throw ValidationError("checkpoint schema does not match the dataset's feature dim and class count");
  }
  cfg.layers = model.num_layers();
  const PreparedData prepared = prepare_data(h, cfg);

  std::optional<PolicyParams> policy;
  if (cfg.k_eval > 0 && cfg.mode == SamplerMode::adaptive) {
    const auto path = checkpoint.parent_path() / "policy.hsmp";
    policy = PolicyParams{load_checkpoint(path)};
  }

  EvalReport r;
  r.split = std::string(split);
  const std::vector<NodeId>* ids = nullptr;
  if (split == "train") ids = &prepared.split.train_ids;
  else if (split == "val") ids = &prepared.split.val_ids;
  else if (split == "test") ids = &prepared.split.test_ids;
  else throw ValidationError("split must be train, val or test");
  r.nodes = ids->size();
  r.accuracy = evaluate(model, prepared, *ids, eval_options(cfg, policy ? &*policy : nullptr, derive_seed(cfg.seed, {0xE7A1, 0xFFFF})));
  return r;
}

std::string to_json(const EvalReport& r) {
  ordered_json j;
  j["split"] = r.split;
  j["accuracy"] = r.accuracy;
  j["nodes"] = r.nodes;
  return j.dump();
}

std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HYPERSAMPLE_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min<std::size_t>(n, v);
  }
  return n;
}

AblationResult run_ablate(const RunConfigFile& cfg, const std::filesystem::path& out_dir) {
  if (cfg.dataset.empty()) throw ValidationError("ablation config needs a dataset");
  const Hypergraph h = load_hypergraph(cfg.dataset);

  struct RowSpec {
    const char* name;
    const char* slug;
    SamplerMode mode;
    double rha;
  };
  const RowSpec specs[] = {{"Rdm-GCN", "rdm_gcn", SamplerMode::random, 0.0},
                           {"Ada-GCN", "ada_gcn", SamplerMode::adaptive, 0.0},
                           {"Ada-GCN+RHA", "ada_gcn_rha", SamplerMode::adaptive, cfg.rha_ablation_ratio}};

  AblationResult result;
  struct Job {
    std::size_t row;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < std::size(specs); ++r) {
    AblationRow row;
    row.name = specs[r].name;
    row.runs.resize(cfg.seeds.size());
    result.rows.push_back(std::move(row));
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({r, s});
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const RowSpec& spec = specs[jobs[j].row];
        TrainConfig tc = cfg.train;
        tc.mode = spec.mode;
        tc.rha_ratio = spec.rha;
        tc.seed = cfg.seeds[jobs[j].run];
        const auto dir = out_dir / "runs" / spec.slug / ("seed_" + std::to_string(tc.seed));
        const TrainResult res = run_train(h, tc, dir);
        AblationRun& run = result.rows[jobs[j].row].runs[jobs[j].run];
        run.seed = tc.seed;
        run.metrics = res.metrics;
        if (!res.metrics.empty()) {
          run.test_accuracy = res.metrics[best_val_epoch(res.metrics)].test_accuracy;
          run.final_test_accuracy = res.metrics.back().test_accuracy;
        }
        run.mean_epoch_time_s = mean_of(res.epoch_seconds);
        run.wall_time_s = res.wall_time_s;
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(thread_budget(), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& row : result.rows) {
    std::vector<double> acc, times;
    for (const auto& run : row.runs) {
      acc.push_back(run.test_accuracy);
      times.push_back(run.mean_epoch_time_s);
    }
    row.mean = mean_of(acc);
    row.std = sample_std(acc);
    row.epoch_time_s = mean_of(times);
  }

  ordered_json table = ordered_json::array();
  for (const auto& row : result.rows) {
    ordered_json j;
    j["method"] = row.name;
    j["mean"] = row.mean;
    j["std"] = row.std;
    j["epoch_time_s"] = row.epoch_time_s;
    ordered_json runs = ordered_json::array();
    for (const auto& run : row.runs) runs.push_back({{"seed", run.seed}, {"test_accuracy", run.test_accuracy}});
    j["runs"] = runs;
    table.push_back(j);
  }
  std::filesystem::create_directories(out_dir);
  open_out(out_dir / "ablation.json") << table.dump(2) << '\n';

  std::ofstream md = open_out(out_dir / "ablation.md");
  md << "| Method | Mean acc (%) | Std (%) | Epoch time (s) |\n|---|---|---|---|\n";
  md << std::fixed;
  for (const auto& row : result.rows) {
    md << "| " << row.name << " | " << std::setprecision(2) << 100.0 * row.mean << " | " << 100.0 * row.std << " | "
       << std::setprecision(3) << row.epoch_time_s << " |\n";
  }
  return result;
}

}  // namespace hypersample
