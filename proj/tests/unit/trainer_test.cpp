#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hypersample/adam.hpp"
#include "hypersample/error.hpp"
#include "hypersample/rng.hpp"
#include "hypersample/trainer.hpp"
#include "support/oracles.hpp"

using namespace hypersample;

namespace {

SyntheticConfig small_synthetic() {
  SyntheticConfig c;
  c.num_nodes = 120;
  c.num_classes = 3;
  c.edges_per_class = 20;
  c.edge_size = 4;
  c.feature_dim = 6;
  c.feature_noise_sigma = 0.8;
  return c;
}

TrainConfig quick_config(SamplerMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.epochs = 3;
  cfg.mlp_epochs = 3;
  cfg.hidden = 8;
  cfg.policy_hidden = 6;
  cfg.batch_size = 16;
  cfg.k = 4;
  cfg.seed = 3;
  return cfg;
}

bool has_isolated(const Hypergraph& h) {
  for (NodeId v = 0; v < h.num_nodes(); ++v)
    if (h.incident_edges(v).empty()) return true;
  return false;
}

}  // namespace

TEST(Config, ValidateNamesOffendingField) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lr = 0.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("lr"), std::string::npos);
  }
  cfg = TrainConfig{};
  cfg.split = {0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.trajectories_per_batch = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.objective = PolicyObjective::trajectory_balance;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(TrainConfig{}.schema(16, 4), (std::vector<std::size_t>{16, 64, 4}));
}

TEST(Metrics, JsonLineFieldOrder) {
  EpochMetrics m;
  m.epoch = 2;
  m.train_loss = 0.5;
  m.sampled_node_count = 17;
  EXPECT_EQ(to_json_line(m),
            "{\"epoch\":2,\"train_loss\":0.5,\"policy_loss\":0.0,\"val_accuracy\":0.0,\"test_accuracy\":0.0,"
            "\"entropy_mean\":0.0,\"entropy_std\":0.0,\"epoch_time_s\":0.0,\"peak_resident_mb\":0.0,"
            "\"sampled_node_count\":17}");
}

TEST(Pretrain, ZeroEpochsReturnsInitialization) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 1);
  TrainConfig cfg = quick_config(SamplerMode::random);
  cfg.mlp_epochs = 0;
  const DatasetSplit split = split_dataset(h, cfg.split, cfg.seed);
  const auto schema = cfg.schema(h.feature_dim(), h.num_classes());
  EXPECT_EQ(pretrain_mlp(h, split, cfg), init_glorot(schema, derive_seed(cfg.seed, {0x3C})));
}

TEST(Pretrain, SeparableFeaturesAreLearnedAndReproducible) {
  SyntheticConfig sc = small_synthetic();
  sc.num_nodes = 400;
  sc.feature_noise_sigma = 0.1;
  const Hypergraph h = generate_synthetic(sc, 2);
  TrainConfig cfg = quick_config(SamplerMode::random);
  cfg.mlp_epochs = 50;
  cfg.lr = 0.01;
  const DatasetSplit split = split_dataset(h, cfg.split, cfg.seed);
  const ModelParams a = pretrain_mlp(h, split, cfg);
  const ModelParams b = pretrain_mlp(h, split, cfg);
  EXPECT_EQ(a, b);
  EXPECT_GT(mlp_accuracy(a, to_double(h.features()), h.labels(), split.train_ids), 0.95);
  DatasetSplit empty = split;
  empty.train_ids.clear();
  EXPECT_THROW(pretrain_mlp(h, empty, cfg), ValidationError);
}

TEST(Train, FullModeMatchesDenseOracleTraining) {
  std::mt19937_64 rng(31);
  oracle::RandomHypergraphSpec spec;
  spec.max_nodes = 12;
  spec.max_edges = 8;
  spec.max_edge = 4;
  int checked = 0;
  while (checked < 5) {
    const Hypergraph h = oracle::random_hypergraph(rng, spec);
    const ExpandedGraph g(h);
    if (g.num_pairs() == 0 || g.num_pairs() > 50 || has_isolated(h)) continue;
    TrainConfig cfg;
    cfg.mode = SamplerMode::full;
    cfg.mlp_init = false;
    cfg.epochs = 10;
    cfg.hidden = 5;
    cfg.lr = 0.05;
    cfg.batch_size = 1000;  // one batch holding every train node
    cfg.seed = static_cast<std::uint64_t>(checked);
    cfg.split = {0.6, 0.2, 0.2};
    const PreparedData data = prepare_data(h, cfg);
    if (data.split.train_ids.empty()) continue;
    ++checked;
    const TrainResult res = train(data, cfg);
    const std::vector<double> want =
        oracle::dense_full_batch_training(h, g, res.initial_model, data.split.train_ids, cfg.lr, cfg.epochs);
    ASSERT_EQ(res.metrics.size(), want.size());
    for (std::size_t e = 0; e < want.size(); ++e) EXPECT_NEAR(res.metrics[e].train_loss, want[e], 1e-8) << "epoch " << e;
  }
}

TEST(Train, RandomModeWithUnboundedBudgetEqualsFullMode) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 4);
  TrainConfig full = quick_config(SamplerMode::full);
  full.mlp_epochs = 2;
  TrainConfig rnd = full;
  rnd.mode = SamplerMode::random;
  rnd.k = 1000000;  // exceeds every candidate set, so nothing is dropped
  rnd.trajectories_per_batch = 1;
  const TrainResult a = train(h, full);
  const TrainResult b = train(h, rnd);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t e = 0; e < a.metrics.size(); ++e) {
    EXPECT_NEAR(a.metrics[e].train_loss, b.metrics[e].train_loss, 1e-12);
    EXPECT_EQ(a.metrics[e].test_accuracy, b.metrics[e].test_accuracy);
  }
  EXPECT_EQ(a.model, b.model);
}

TEST(Train, SameSeedSameMetrics) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 5);
  for (SamplerMode mode : {SamplerMode::adaptive, SamplerMode::random}) {
    const TrainConfig cfg = quick_config(mode);
    std::vector<std::string> a, b;
    train(h, cfg, [&](const EpochMetrics& m) { a.push_back(to_json_line(m)); });
    train(h, cfg, [&](const EpochMetrics& m) { b.push_back(to_json_line(m)); });
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), cfg.epochs);
  }
}

TEST(Train, RandomModeLeavesPolicyAtInitialization) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 6);
  const TrainConfig cfg = quick_config(SamplerMode::random);
  const TrainResult res = train(h, cfg);
  EXPECT_EQ(res.policy.net, init_policy(h.feature_dim(), cfg.policy_hidden, cfg.seed).net);
  for (const auto& m : res.metrics) EXPECT_EQ(m.policy_loss, 0.0);

  const TrainResult ada = train(h, quick_config(SamplerMode::adaptive));
  EXPECT_FALSE(ada.policy.net == init_policy(h.feature_dim(), cfg.policy_hidden, cfg.seed).net);
}

TEST(Train, MetricsStayInRangeAndLossFinite) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 7);
  TrainConfig cfg = quick_config(SamplerMode::adaptive);
  cfg.objective = PolicyObjective::trajectory_balance;
  const TrainResult res = train(h, cfg);
  ASSERT_TRUE(res.log_z.has_value());
  for (const auto& m : res.metrics) {
    EXPECT_TRUE(std::isfinite(m.train_loss));
    EXPECT_GE(m.val_accuracy, 0.0);
    EXPECT_LE(m.val_accuracy, 1.0);
    EXPECT_GE(m.test_accuracy, 0.0);
    EXPECT_LE(m.test_accuracy, 1.0);
    EXPECT_GE(m.entropy_mean, 0.0);
    EXPECT_LE(m.entropy_mean, std::log(2.0));
    EXPECT_EQ(m.epoch_time_s, 0.0);  // timing goes to a separate log unless requested
  }
  EXPECT_EQ(res.epoch_seconds.size(), cfg.epochs);
}

TEST(Train, FootprintBoundedByBudget) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 8);
  const ExpandedGraph g(h);
  std::size_t max_copies = 0;
  for (NodeId v = 0; v < h.num_nodes(); ++v) max_copies = std::max(max_copies, g.copies_of(v).size());
  for (SamplerMode mode : {SamplerMode::adaptive, SamplerMode::random}) {
    const TrainConfig cfg = quick_config(mode);
    const TrainResult res = train(h, cfg);
    const std::size_t batch_pairs = cfg.batch_size * max_copies;
    for (const auto& m : res.metrics) {
      EXPECT_LE(m.sampled_node_count, batch_pairs + cfg.layers * cfg.k);
      EXPECT_LE(m.sampled_node_count, static_cast<std::size_t>(static_cast<double>(batch_pairs) *
                                                               std::pow(cfg.k + 1.0, cfg.layers)));
      EXPECT_GT(m.sampled_node_count, 0u);
    }
  }
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  const Hypergraph h = generate_synthetic(small_synthetic(), 9);
  TrainConfig cfg = quick_config(SamplerMode::random);
  cfg.mlp_init = false;
  cfg.lr = 1e300;
  try {
    train(h, cfg);
    FAIL() << "expected a numeric failure";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch "), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("batch "), std::string::npos) << e.what();
  }
}

TEST(ConstantReward, TrainedPolicyCollapsesZetaVariance) {
  // Stub environment: every trajectory receives the same loss, so only the
  // spread in log P_F remains. Fresh trajectories are drawn for every step.
  const Hypergraph h = generate_synthetic(small_synthetic(), 10);
  const ExpandedGraph g(h);
  const Matrix h0 = project_features(g, to_double(h.features()));
  PolicyParams policy = init_policy(h.feature_dim(), 8, 1);
  std::mt19937_64 rng(10);
  for (double& w : policy.net.layers.back().weight.values()) w = std::normal_distribution<double>(0.0, 1.0)(rng);
  const std::vector<PairId> targets{5, 50, 120};

  const auto draw = [&](std::uint64_t step) {
    std::vector<Trajectory> batch;
    for (std::uint64_t s = 0; s < 8; ++s) {
      SubgraphRequest req;
      req.k = 4;
      req.seed = derive_seed(step, {s});
      SampledComputation sc = build_computation_subgraph(g, h0, targets, req, &policy);
      sc.trajectory.log_reward = log_reward(1.0, 1.0);
      batch.push_back(std::move(sc.trajectory));
    }
    return batch;
  };
  const auto spread = [&](const std::vector<Trajectory>& batch) {
    std::vector<double> z;
    for (const auto& t : batch) z.push_back(zeta(t));
    return variance_loss(z);
  };
  const auto mean_spread = [&](std::uint64_t base) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) s += spread(draw(base + i));
    return s / 20.0;
  };

  const double before = mean_spread(100000);
  AdamConfig ac;
  ac.lr = 0.05;
  Adam opt(ac, policy.net.tensor_copies());
  for (std::uint64_t step = 0; step < 50; ++step) {
    const auto batch = draw(step);
    Tape t;
    const ParamVars vars = register_params(t, policy.net);
    t.backward(policy_objective(t, vars, batch, PolicyObjective::variance, std::nullopt));
    const auto grads = collect_grads(t, vars);
    const auto ptrs = policy.net.tensors();
    opt.step(ptrs, grads);
  }
  const double after = mean_spread(200000);
  EXPECT_LT(after, 0.1 * before) << "before " << before << " after " << after;
}

TEST(Evaluate, PerfectAndConstantPredictors) {
  SyntheticConfig sc = small_synthetic();
  sc.num_nodes = 200;
  sc.num_classes = 4;
  sc.noise_edge_fraction = 0.0;
  sc.feature_noise_sigma = 0.0;
  const Hypergraph h = generate_synthetic(sc, 11);
  TrainConfig cfg = quick_config(SamplerMode::full);
  cfg.layers = 1;
  const PreparedData data = prepare_data(h, cfg);

  // One layer reading the class one-hot: pure hyperedges keep the argmax.
  ModelParams perfect = init_zeros(cfg.schema(h.feature_dim(), h.num_classes()));
  for (std::size_t c = 0; c < 4; ++c) perfect.layers[0].weight(c, c) = 1.0;
  EvalOptions opt;
  EXPECT_EQ(evaluate(perfect, data, data.split.test_ids, opt), 1.0);

  ModelParams constant = init_zeros(cfg.schema(h.feature_dim(), h.num_classes()));
  constant.layers[0].bias(0, 2) = 1.0;
  std::vector<NodeId> all(h.num_nodes());
  for (NodeId v = 0; v < h.num_nodes(); ++v) all[v] = v;
  EXPECT_NEAR(evaluate(constant, data, all, opt), 0.25, 1e-12);

  // Sampled evaluation with k_eval also respects order invariance.
  ModelParams noisy = init_glorot(cfg.schema(h.feature_dim(), h.num_classes()), 4);
  std::vector<NodeId> reversed(data.split.test_ids.rbegin(), data.split.test_ids.rend());
  EXPECT_EQ(evaluate(noisy, data, data.split.test_ids, opt), evaluate(noisy, data, reversed, opt));
  EXPECT_THROW(evaluate(noisy, data, {}, opt), ValidationError);
}
