#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypersample/expansion.hpp"
#include "hypersample/hypergraph.hpp"
#include "hypersample/models.hpp"
#include "hypersample/sampler.hpp"

namespace hypersample {

struct TrainConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t epochs = 50;
  std::size_t mlp_epochs = 50;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 128;  // original nodes per minibatch
  std::size_t k = 8;             // nodes added per hop; 0 means unlimited
  double tau = 1.0;
  double rha_ratio = 0.0;
  double w_e = 1.0;
  double w_v = 1.0;
  SamplerMode mode = SamplerMode::adaptive;
  PolicyObjective objective = PolicyObjective::variance;
  std::uint64_t seed = 0;
  SplitRatios split{};

  std::size_t trajectories_per_batch = 4;  // sampled subgraphs per root batch
  std::size_t policy_hidden = 32;
  double policy_lr = 1e-3;
  bool mlp_init = true;
  std::size_t mlp_batch_size = 64;
  std::size_t k_eval = 0;  // 0: exhaustive evaluation
  bool record_timing = false;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
  std::vector<std::size_t> schema(std::size_t feature_dim, std::size_t num_classes) const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double policy_loss = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double entropy_mean = 0.0;
  double entropy_std = 0.0;
  double epoch_time_s = 0.0;
  double peak_resident_mb = 0.0;
  std::size_t sampled_node_count = 0;  // largest computation subgraph of the epoch
};

/// One compact JSON object, fields in declaration order.
std::string to_json_line(const EpochMetrics& m);

/// Everything derived from the input hypergraph before training starts.
struct PreparedData {
  Hypergraph structure;  // after augmentation
  ExpandedGraph graph;
  BackProjection bp;
  Matrix node_features;  // num_nodes x d
  Matrix h0;             // num_pairs x d
  DatasetSplit split;
};

PreparedData prepare_data(const Hypergraph& h, const TrainConfig& cfg);

/// Generic minibatch MLP training on the split's train nodes; keeps the
/// parameters of the epoch with the best validation accuracy (earliest on
/// ties). Zero epochs returns the initialization.
ModelParams pretrain_mlp(const Hypergraph& h, const DatasetSplit& split, const TrainConfig& cfg);

double mlp_accuracy(const ModelParams& p, const Matrix& x, std::span<const std::uint32_t> labels,
                    std::span<const NodeId> ids);

struct EvalOptions {
  std::size_t k_eval = 0;
  SamplerMode mode = SamplerMode::full;
  const PolicyParams* policy = nullptr;
  AggregationWeights weights{};
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
};

/// Fraction of `ids` whose predicted class equals the label. Exhaustive
/// neighborhoods when k_eval == 0; otherwise each batch of ids is sampled
/// with the given mode. Nodes without copies are scored by the self-only
/// path of the same weights.
double evaluate(const ModelParams& model, const PreparedData& data, std::span<const NodeId> ids,
                const EvalOptions& opt);

/// Per-node class predictions with exhaustive neighborhoods.
std::vector<std::uint32_t> predict_all(const ModelParams& model, const PreparedData& data, AggregationWeights w);

struct TrainResult {
  ModelParams model;
  PolicyParams policy;
  ModelParams initial_model;
  std::optional<double> log_z;  // trajectory-balance objective only
  std::vector<EpochMetrics> metrics;
  std::vector<double> epoch_seconds;  // always measured
  double mlp_val_accuracy = 0.0;
  double wall_time_s = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

TrainResult train(const Hypergraph& h, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train(const PreparedData& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

EvalOptions eval_options(const TrainConfig& cfg, const PolicyParams* policy, std::uint64_t seed);

/// Peak resident set size of this process in MiB, 0 when unavailable.
double peak_resident_mb();

}  // namespace hypersample
