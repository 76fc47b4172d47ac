#include "hypersample/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "hypersample/adam.hpp"
#include "hypersample/augmentation.hpp"
#include "hypersample/error.hpp"
#include "hypersample/ops.hpp"
#include "hypersample/rng.hpp"

namespace hypersample {

namespace {

void require_positive(bool ok, const char* field) {
  if (!ok) throw ValidationError(std::string(field) + " must be positive");
}

std::vector<std::uint32_t> gather_labels(const Hypergraph& h, std::span<const NodeId> ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (NodeId v : ids) out.push_back(h.labels()[v]);
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const NodeId> ids) {
  Matrix out(ids.size(), x.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = x.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void shuffle(std::vector<NodeId>& ids, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(ids[i - 1], ids[j]);
  }
}

/// Targets are all copies of the batch nodes; `readout` maps them back onto
/// the batch nodes with the back-projection weights.
struct BatchTargets {
  std::vector<PairId> targets;
  SparseRows readout;
};

BatchTargets batch_targets(const PreparedData& data, std::span<const NodeId> nodes) {
  BatchTargets b;
  std::unordered_map<PairId, std::uint32_t> local;
  for (NodeId v : nodes) {
    for (PairId p : data.graph.copies_of(v)) {
      local.emplace(p, static_cast<std::uint32_t>(b.targets.size()));
      b.targets.push_back(p);
    }
  }
  b.readout.num_cols = b.targets.size();
  const SparseRows& bp = data.bp.rows;
  for (NodeId v : nodes) {
    for (std::size_t j = bp.offsets[v]; j < bp.offsets[v + 1]; ++j) b.readout.push(local.at(bp.cols[j]), bp.weights[j]);
    b.readout.finish_row();
  }
  return b;
}

double accuracy_of(const std::vector<std::uint32_t>& predicted, const std::vector<std::uint32_t>& labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::vector<std::uint32_t> row_argmax(const Matrix& scores) {
  std::vector<std::uint32_t> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) out[i] = argmax_row(scores.row(i));
  return out;
}

void add_into(std::vector<Matrix>& acc, const std::vector<Matrix>& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto a = acc[i].values();
    const auto b = g[i].values();
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
  }
}

}  // namespace

void TrainConfig::validate() const {
  require_positive(layers >= 1, "layers");
  require_positive(hidden >= 1, "hidden");
  require_positive(lr > 0.0, "lr");
  require_positive(policy_lr > 0.0, "policy_lr");
  require_positive(batch_size >= 1, "batch_size");
  require_positive(mlp_batch_size >= 1, "mlp_batch_size");
  require_positive(tau > 0.0, "tau");
  require_positive(trajectories_per_batch >= 1, "trajectories_per_batch");
  require_positive(policy_hidden >= 1, "policy_hidden");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (rha_ratio < 0.0) throw ValidationError("rha_ratio must be >= 0");
  if (w_e < 0.0 || w_v < 0.0 || w_e + w_v <= 0.0) throw ValidationError("w_e and w_v must be >= 0 with a positive sum");
  if (mode == SamplerMode::adaptive && objective == PolicyObjective::variance && trajectories_per_batch < 2) {
    throw ValidationError("trajectories_per_batch must be >= 2 for the variance objective");
  }
  const double sum = split.train + split.val + split.test;
  if (split.train < 0.0 || split.val < 0.0 || split.test < 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be nonnegative and sum to 1");
  }
}

std::vector<std::size_t> TrainConfig::schema(std::size_t feature_dim, std::size_t num_classes) const {
  std::vector<std::size_t> s{feature_dim};
  for (std::size_t l = 1; l < layers; ++l) s.push_back(hidden);
  s.push_back(num_classes);
  return s;
}

std::string to_json_line(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["policy_loss"] = m.policy_loss;
  j["val_accuracy"] = m.val_accuracy;
  j["test_accuracy"] = m.test_accuracy;
  j["entropy_mean"] = m.entropy_mean;
  j["entropy_std"] = m.entropy_std;
  j["epoch_time_s"] = m.epoch_time_s;
  j["peak_resident_mb"] = m.peak_resident_mb;
  j["sampled_node_count"] = m.sampled_node_count;
  return j.dump();
}

PreparedData prepare_data(const Hypergraph& h, const TrainConfig& cfg) {
  PreparedData d;
  d.structure = cfg.rha_ratio > 0.0 ? augment(h, RhaConfig{cfg.rha_ratio, derive_seed(cfg.seed, {0x2A})}) : h;
  d.graph = ExpandedGraph(d.structure);
  d.bp = make_back_projection(d.structure, d.graph);
  d.node_features = to_double(h.features());
  d.h0 = project_features(d.graph, d.node_features);
  d.split = split_dataset(h, cfg.split, cfg.seed);
  return d;
}

double mlp_accuracy(const ModelParams& p, const Matrix& x, std::span<const std::uint32_t> labels,
                    std::span<const NodeId> ids) {
  if (ids.empty()) throw ValidationError("accuracy over an empty node set");
  const auto pred = row_argmax(mlp_forward(p, gather_rows(x, ids)));
  std::size_t hit = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) hit += pred[i] == labels[ids[i]];
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

ModelParams pretrain_mlp(const Hypergraph& h, const DatasetSplit& split, const TrainConfig& cfg) {
  if (split.train_ids.empty()) throw ValidationError("pretrain_mlp: empty train split");
  const auto schema = cfg.schema(h.feature_dim(), h.num_classes());
  ModelParams p = init_glorot(schema, derive_seed(cfg.seed, {0x3C}));
  if (cfg.mlp_epochs == 0) return p;

  const Matrix x = to_double(h.features());
  const std::span<const std::uint32_t> labels = h.labels();
  Adam opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}, p.tensor_copies());
  ModelParams best = p;
  double best_acc = -1.0;
  std::vector<NodeId> order = split.train_ids;
  for (std::size_t epoch = 0; epoch < cfg.mlp_epochs; ++epoch) {
    shuffle(order, derive_seed(cfg.seed, {0x317, epoch}));
    for (std::size_t b = 0; b < order.size(); b += cfg.mlp_batch_size) {
      const std::span<const NodeId> ids(order.data() + b, std::min(cfg.mlp_batch_size, order.size() - b));
      Tape t;
      const ParamVars vars = register_params(t, p);
      const auto batch_labels = gather_labels(h, ids);
      const Var loss = ops::softmax_cross_entropy(t, mlp_forward(t, vars, t.constant(gather_rows(x, ids))), batch_labels);
      t.backward(loss);
      const auto grads = collect_grads(t, vars);
      const auto params = p.tensors();
      opt.step(params, grads);
    }
    const auto& eval_ids = split.val_ids.empty() ? split.train_ids : split.val_ids;
    const double acc = mlp_accuracy(p, x, labels, eval_ids);
    if (acc > best_acc) {
      best_acc = acc;
      best = p;
    }
  }
  return best;
}

EvalOptions eval_options(const TrainConfig& cfg, const PolicyParams* policy, std::uint64_t seed) {
  EvalOptions o;
  o.k_eval = cfg.k_eval;
  o.mode = cfg.k_eval == 0 ? SamplerMode::full : cfg.mode;
  o.policy = policy;
  o.weights = AggregationWeights{cfg.w_e, cfg.w_v};
  o.batch_size = cfg.batch_size;
  o.seed = seed;
  return o;
}

std::vector<std::uint32_t> predict_all(const ModelParams& model, const PreparedData& data, AggregationWeights w) {
  const Matrix logits = gcn_forward_full(model, full_aggregation(data.graph, w), data.h0);
  NodeScores scores = predict_nodes(logits, data.bp);
  std::vector<NodeId> isolated;
  for (NodeId v = 0; v < data.graph.num_source_nodes(); ++v)
    if (data.graph.copies_of(v).empty()) isolated.push_back(v);
  if (!isolated.empty()) {
    const auto self_only = row_argmax(mlp_forward(model, gather_rows(data.node_features, isolated)));
    for (std::size_t i = 0; i < isolated.size(); ++i) scores.classes[isolated[i]] = self_only[i];
  }
  return scores.classes;
}

double evaluate(const ModelParams& model, const PreparedData& data, std::span<const NodeId> ids,
                const EvalOptions& opt) {
  if (ids.empty()) throw ValidationError("evaluate: empty split");
  const auto labels = gather_labels(data.structure, ids);
  if (opt.k_eval == 0 || opt.mode == SamplerMode::full) {
    const auto all = predict_all(model, data, opt.weights);
    std::vector<std::uint32_t> pred;
    pred.reserve(ids.size());
    for (NodeId v : ids) pred.push_back(all[v]);
    return accuracy_of(pred, labels);
  }

  std::vector<std::uint32_t> pred(ids.size());
  std::vector<NodeId> batch;
  std::vector<std::size_t> slots;
  const auto flush = [&](std::size_t batch_index) {
    if (batch.empty()) return;
    const BatchTargets bt = batch_targets(data, batch);
    SubgraphRequest req{model.num_layers(), opt.k_eval, opt.mode, opt.weights, derive_seed(opt.seed, {batch_index})};
    const SampledComputation comp = build_computation_subgraph(data.graph, data.h0, bt.targets, req, opt.policy);
    const auto cls = row_argmax(sparse_multiply(bt.readout, gcn_forward_sampled(model, comp.subgraph, data.h0)));
    for (std::size_t i = 0; i < batch.size(); ++i) pred[slots[i]] = cls[i];
    batch.clear();
    slots.clear();
  };
  std::vector<NodeId> isolated;
  std::vector<std::size_t> isolated_slots;
  std::size_t batch_index = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (data.graph.copies_of(ids[i]).empty()) {
      isolated.push_back(ids[i]);
      isolated_slots.push_back(i);
      continue;
    }
    batch.push_back(ids[i]);
    slots.push_back(i);
    if (batch.size() == opt.batch_size) flush(batch_index++);
  }
  flush(batch_index);
  if (!isolated.empty()) {
    const auto self_only = row_argmax(mlp_forward(model, gather_rows(data.node_features, isolated)));
    for (std::size_t i = 0; i < isolated.size(); ++i) pred[isolated_slots[i]] = self_only[i];
  }
  return accuracy_of(pred, labels);
}

double peak_resident_mb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      double kb = 0.0;
      fields >> kb;
      return kb / 1024.0;
    }
  }
  return 0.0;
}

TrainResult train(const Hypergraph& h, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  return train(prepare_data(h, cfg), cfg, on_epoch);
}

TrainResult train(const PreparedData& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const Hypergraph& h = data.structure;
  if (data.split.train_ids.empty()) throw ValidationError("train: empty train split");

  TrainResult res;
  const auto schema = cfg.schema(h.feature_dim(), h.num_classes());
  if (cfg.mlp_init) {
    const ModelParams mlp = pretrain_mlp(h, data.split, cfg);
    const auto& ids = data.split.val_ids.empty() ? data.split.train_ids : data.split.val_ids;
    res.mlp_val_accuracy = mlp_accuracy(mlp, data.node_features, h.labels(), ids);
    res.model = transfer_weights(mlp, schema);
  } else {
    res.model = init_glorot(schema, derive_seed(cfg.seed, {0x9C}));
  }
  res.initial_model = res.model;
  res.policy = init_policy(h.feature_dim(), cfg.policy_hidden, cfg.seed);

  const bool adaptive = cfg.mode == SamplerMode::adaptive;
  const bool use_tb = adaptive && cfg.objective == PolicyObjective::trajectory_balance;
  const std::size_t trajectories = cfg.mode == SamplerMode::full ? 1 : cfg.trajectories_per_batch;
  const AggregationWeights weights{cfg.w_e, cfg.w_v};

  Adam model_opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay}, res.model.tensor_copies());
  Matrix log_z(1, 1, 0.0);
  std::vector<Matrix> policy_init = res.policy.net.tensor_copies();
  if (use_tb) policy_init.push_back(log_z);
  Adam policy_opt(AdamConfig{cfg.policy_lr}, policy_init);

  // Nodes without copies have no expanded representation to train on.
  std::vector<NodeId> train_nodes;
  for (NodeId v : data.split.train_ids)
    if (!data.graph.copies_of(v).empty()) train_nodes.push_back(v);
  if (train_nodes.empty()) throw ValidationError("train: no train node belongs to a hyperedge");
  const std::size_t num_batches = (train_nodes.size() + cfg.batch_size - 1) / cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;
    std::vector<double> scored;
    double loss_sum = 0.0;
    double policy_loss_sum = 0.0;
    std::vector<NodeId> order = train_nodes;
    shuffle(order, derive_seed(cfg.seed, {0xB47C, epoch}));

    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::span<const NodeId> nodes(order.data() + b * cfg.batch_size,
                                          std::min(cfg.batch_size, order.size() - b * cfg.batch_size));
      const BatchTargets bt = batch_targets(data, nodes);
      const auto labels = gather_labels(h, nodes);
      std::vector<Trajectory> batch_traj;
      std::vector<Matrix> grad_sum;
      double batch_loss = 0.0;
      try {
        // Hop 1 depends only on the targets and the policy, both fixed within the batch.
        std::optional<TrajectoryStep> first_hop;
        for (std::size_t s = 0; s < trajectories; ++s) {
          SubgraphRequest req{cfg.layers, cfg.k, cfg.mode, weights, derive_seed(cfg.seed, {0x5A, epoch, b, s})};
          if (first_hop) req.first_hop = &*first_hop;
          SampledComputation comp = build_computation_subgraph(data.graph, data.h0, bt.targets, req, &res.policy);
          if (adaptive && !first_hop && !comp.trajectory.steps.empty()) first_hop = comp.trajectory.steps.front();
          m.sampled_node_count = std::max(m.sampled_node_count, comp.subgraph.nodes.size());

          Tape t;
          const ParamVars vars = register_params(t, res.model);
          const Var logits = gcn_forward_sampled(t, vars, comp.subgraph, data.h0);
          const Var loss = ops::softmax_cross_entropy(t, ops::sparse_neighbor_aggregate(t, logits, bt.readout), labels);
          t.backward(loss);
          add_into(grad_sum, collect_grads(t, vars));
          const double loss_value = t.value(loss)(0, 0);
          batch_loss += loss_value;

          if (adaptive) {
            for (const auto& st : comp.trajectory.steps)
              for (double z : st.logits) scored.push_back(ops::sigmoid(z));
            comp.trajectory.log_reward = log_reward(loss_value, cfg.tau);
            comp.trajectory.root_batch = b;
            batch_traj.push_back(std::move(comp.trajectory));
          }
        }
        const double inv = 1.0 / static_cast<double>(trajectories);
        for (auto& g : grad_sum)
          for (double& v : g.values()) v *= inv;
        const auto params = res.model.tensors();
        model_opt.step(params, grad_sum);
        loss_sum += batch_loss * inv;

        if (adaptive) {
          Tape t;
          const ParamVars pv = register_params(t, res.policy.net);
          std::optional<Var> z;
          if (use_tb) z = t.leaf(log_z);
          const Var obj = policy_objective(t, pv, batch_traj, cfg.objective, z);
          policy_loss_sum += t.value(obj)(0, 0);
          t.backward(obj);
          auto grads = collect_grads(t, pv);
          auto tensors = res.policy.net.tensors();
          if (use_tb) {
            grads.push_back(t.grad(*z));
            tensors.push_back(&log_z);
          }
          policy_opt.step(tensors, grads);
        }
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) + ": " + e.what());
      }
    }

    m.train_loss = loss_sum / static_cast<double>(num_batches);
    m.policy_loss = policy_loss_sum / static_cast<double>(num_batches);
    if (!std::isfinite(m.train_loss)) {
      throw NumericError("epoch " + std::to_string(epoch) + ": non-finite train loss");
    }
    const PolicyParams* pol = adaptive ? &res.policy : nullptr;
    const auto opt_val = eval_options(cfg, pol, derive_seed(cfg.seed, {0xE7A1, epoch, 0}));
    const auto opt_test = eval_options(cfg, pol, derive_seed(cfg.seed, {0xE7A1, epoch, 1}));
    m.val_accuracy = data.split.val_ids.empty() ? 0.0 : evaluate(res.model, data, data.split.val_ids, opt_val);
    m.test_accuracy = data.split.test_ids.empty() ? 0.0 : evaluate(res.model, data, data.split.test_ids, opt_test);
    if (!scored.empty()) {
      const EntropyStats es = entropy_stats(scored);
      m.entropy_mean = es.mean;
      m.entropy_std = es.stddev;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    res.epoch_seconds.push_back(seconds);
    if (cfg.record_timing) {
      m.epoch_time_s = seconds;
      m.peak_resident_mb = peak_resident_mb();
    }
    res.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  if (use_tb) res.log_z = log_z(0, 0);
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return res;
}

}  // namespace hypersample
