#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hypersample/commands.hpp"
#include "hypersample/error.hpp"

namespace hypersample {
namespace {

using nlohmann::json;

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
    throw ParseError(e.what(), line);
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ValidationError("config key \"" + key + "\" must be " + expected);
}

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad_type(key, "a nonnegative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) bad_type(key, "a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad_type(key, "a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad_type(key, "a string");
  return v.get<std::string>();
}

}  // namespace

RunConfigFile parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("run config must be a JSON object", 1);
  RunConfigFile rc;
  TrainConfig& t = rc.train;
  for (const auto& [key, v] : doc.items()) {
    if (key == "layers") t.layers = as_count(v, key);
    else if (key == "hidden") t.hidden = as_count(v, key);
    else if (key == "epochs") t.epochs = as_count(v, key);
    else if (key == "mlp_epochs") t.mlp_epochs = as_count(v, key);
    else if (key == "lr") t.lr = as_real(v, key);
    else if (key == "weight_decay") t.weight_decay = as_real(v, key);
    else if (key == "batch_size") t.batch_size = as_count(v, key);
    else if (key == "k") t.k = as_count(v, key);
    else if (key == "tau") t.tau = as_real(v, key);
    else if (key == "rha_ratio") t.rha_ratio = as_real(v, key);
    else if (key == "w_e") t.w_e = as_real(v, key);
    else if (key == "w_v") t.w_v = as_real(v, key);
    else if (key == "mode") t.mode = parse_sampler_mode(as_string(v, key));
    else if (key == "objective") t.objective = parse_policy_objective(as_string(v, key));
    else if (key == "seed") t.seed = as_count(v, key);
    else if (key == "split") {
      if (!v.is_array() || v.size() != 3) bad_type(key, "an array [train, val, test]");
      t.split = SplitRatios{as_real(v[0], key), as_real(v[1], key), as_real(v[2], key)};
    } else if (key == "trajectories_per_batch") t.trajectories_per_batch = as_count(v, key);
    else if (key == "policy_hidden") t.policy_hidden = as_count(v, key);
    else if (key == "policy_lr") t.policy_lr = as_real(v, key);
    else if (key == "mlp_init") t.mlp_init = as_bool(v, key);
    else if (key == "mlp_batch_size") t.mlp_batch_size = as_count(v, key);
    else if (key == "k_eval") t.k_eval = as_count(v, key);
    else if (key == "record_timing") t.record_timing = as_bool(v, key);
    else if (key == "dataset") rc.dataset = base_dir / as_string(v, key);
    else if (key == "output_dir") rc.output_dir = base_dir / as_string(v, key);
    else if (key == "seeds") {
      if (!v.is_array() || v.empty()) bad_type(key, "a nonempty array of seeds");
      rc.seeds.clear();
      for (const auto& s : v) rc.seeds.push_back(as_count(s, key));
    } else if (key == "rha_ablation_ratio") rc.rha_ablation_ratio = as_real(v, key);
    else throw ValidationError("unknown config key \"" + key + "\"");
  }
  t.validate();
  if (rc.rha_ablation_ratio < 0.0) throw ValidationError("rha_ablation_ratio must be >= 0");
  return rc;
}

RunConfigFile load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text(path), path.parent_path());
}

GenerateSpec parse_generate_spec(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("generator spec must be a JSON object", 1);
  GenerateSpec g;
  SyntheticConfig& s = g.synthetic;
  for (const auto& [key, v] : doc.items()) {
    if (key == "num_nodes") s.num_nodes = as_count(v, key);
    else if (key == "num_classes") s.num_classes = as_count(v, key);
    else if (key == "edges_per_class") s.edges_per_class = as_count(v, key);
    else if (key == "edge_size") s.edge_size = as_count(v, key);
    else if (key == "noise_edge_fraction") s.noise_edge_fraction = as_real(v, key);
    else if (key == "feature_dim") s.feature_dim = as_count(v, key);
    else if (key == "feature_noise_sigma") s.feature_noise_sigma = as_real(v, key);
    else if (key == "feature_storage") {
      const std::string mode = as_string(v, key);
      if (mode == "inline") g.storage = FeatureStorage::inline_json;
      else if (mode == "binary") g.storage = FeatureStorage::binary;
      else throw ValidationError("feature_storage must be \"inline\" or \"binary\"");
    } else throw ValidationError("unknown spec key \"" + key + "\"");
  }
  return g;
}

}  // namespace hypersample
