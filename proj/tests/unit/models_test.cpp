#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "hypersample/error.hpp"
#include "hypersample/gradcheck.hpp"
#include "hypersample/models.hpp"
#include "hypersample/ops.hpp"
#include "hypersample/sampler.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace hypersample;

namespace {

ParamVars as_params(std::span<const Var> v) { return ParamVars{std::vector<Var>(v.begin(), v.end())}; }

std::vector<std::size_t> schema_of(std::initializer_list<std::size_t> dims) { return dims; }

Hypergraph th1() { return Hypergraph(3, 2, {{0, 1}, {1, 2}}, FeatureMatrix(3, 2), {0, 1, 0}); }

}  // namespace

TEST(Mlp, ZeroWeightsGiveUniformLoss) {
  const auto schema = schema_of({4, 8, 5});
  const ModelParams p = init_zeros(schema);
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(rng, 6, 4);
  const Matrix logits = mlp_forward(p, x);
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
  Tape t;
  const std::vector<std::uint32_t> labels{0, 1, 2, 3, 4, 0};
  const Var loss = ops::softmax_cross_entropy(t, t.constant(logits), labels);
  EXPECT_NEAR(t.value(loss)(0, 0), std::log(5.0), 1e-14);
}

TEST(Mlp, IdentitySingleLayerReturnsInput) {
  ModelParams p = init_zeros(schema_of({3, 3}));
  for (std::size_t i = 0; i < 3; ++i) p.layers[0].weight(i, i) = 1.0;
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(rng, 4, 3);
  EXPECT_EQ(mlp_forward(p, x), x);
}

TEST(Mlp, TapedAndPlainForwardAgree) {
  const ModelParams p = init_glorot(schema_of({5, 7, 3}), 4);
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(rng, 9, 5);
  Tape t;
  const Var y = mlp_forward(t, register_params(t, p), t.constant(x));
  EXPECT_EQ(t.value(y), mlp_forward(p, x));
}

TEST(Mlp, GradientCheck) {
  const ModelParams p = init_glorot(schema_of({4, 6, 3}), 9);
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(rng, 10, 4);
  const std::vector<std::uint32_t> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const LossBuilder f = [&](Tape& t, std::span<const Var> v) {
    return ops::softmax_cross_entropy(t, mlp_forward(t, as_params(v), t.constant(x)), labels);
  };
  EXPECT_LT(finite_difference_check(f, p.tensor_copies()), 1e-6);
}

TEST(Mlp, InputWidthMismatchThrows) {
  EXPECT_THROW(mlp_forward(init_zeros(schema_of({3, 2})), Matrix(2, 4)), ShapeError);
}

TEST(Transfer, CopyIsExact) {
  const auto schema = schema_of({6, 8, 4});
  const ModelParams mlp = init_glorot(schema, 12);
  const ModelParams gcn = transfer_weights(mlp, schema);
  EXPECT_EQ(gcn, mlp);
  std::mt19937_64 rng(6);
  const Matrix x = oracle::random_matrix(rng, 5, 6);
  EXPECT_EQ(mlp_forward(gcn, x), mlp_forward(mlp, x));
}

TEST(Transfer, SchemaMismatchThrows) {
  const ModelParams mlp = init_zeros(schema_of({512, 512}));
  EXPECT_THROW(transfer_weights(mlp, schema_of({512, 256})), ValidationError);
  EXPECT_THROW(transfer_weights(init_zeros(schema_of({4, 8, 2})), schema_of({4, 2})), ValidationError);
}

TEST(Aggregation, FullRowsMatchDefinitionUnderUnequalWeights) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, {});
    const ExpandedGraph g(h);
    const AggregationWeights w{0.3 + (trial % 5) * 0.4, 1.7 - (trial % 3) * 0.5};
    const Matrix got = to_dense(full_aggregation(g, w));
    for (PairId i = 0; i < g.num_pairs(); ++i) {
      std::vector<double> raw(g.num_pairs(), 0.0);
      double z = 0.0;
      for (PairId j = 0; j < g.num_pairs(); ++j) {
        if (i == j) raw[j] = 0.5 * (w.w_e + w.w_v);
        else if (g.vertex_of(i) == g.vertex_of(j)) raw[j] = w.w_e;
        else if (g.edge_of(i) == g.edge_of(j)) raw[j] = w.w_v;
        z += raw[j];
      }
      for (PairId j = 0; j < g.num_pairs(); ++j) EXPECT_NEAR(got(i, j), raw[j] / z, 1e-15);
    }
  }
}

TEST(SampledGcn, SelfLoopOnlyRow) {
  const Hypergraph h = th1();
  const ExpandedGraph g(h);
  const ModelParams p = init_glorot(schema_of({2, 3, 2}), 1);
  std::mt19937_64 rng(8);
  const Matrix h0 = oracle::random_matrix(rng, g.num_pairs(), 2);
  const LayeredSubgraph sg = assemble_subgraph(g, {1}, {1, 1, 1});
  ASSERT_EQ(sg.depth(), 2u);
  Matrix x(1, 2);
  for (std::size_t j = 0; j < 2; ++j) x(0, j) = h0(1, j);
  Matrix hidden = ops::matmul(x, p.layers[0].weight);
  ops::add_bias_inplace(hidden, p.layers[0].bias);
  ops::relu_inplace(hidden);
  Matrix out = ops::matmul(hidden, p.layers[1].weight);
  ops::add_bias_inplace(out, p.layers[1].bias);
  EXPECT_LT(max_abs_diff(gcn_forward_sampled(p, sg, h0), out), 1e-15);
}

TEST(SampledGcn, UnlimitedSamplingEqualsFullBatch) {
  std::mt19937_64 rng(9);
  oracle::RandomHypergraphSpec spec;
  spec.max_nodes = 12;
  spec.max_edges = 8;
  spec.max_edge = 4;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, spec);
    const ExpandedGraph g(h);
    if (g.num_pairs() == 0 || g.num_pairs() > 50) continue;
    ++checked;
    const std::size_t layers = 1 + trial % 3;
    std::vector<std::size_t> schema{3};
    for (std::size_t l = 1; l < layers; ++l) schema.push_back(5);
    schema.push_back(2);
    const ModelParams p = init_glorot(schema, static_cast<std::uint64_t>(trial));
    const Matrix h0 = oracle::random_matrix(rng, g.num_pairs(), 3);

    std::vector<PairId> targets;
    for (PairId q = 0; q < g.num_pairs(); q += 2) targets.push_back(q);
    for (SamplerMode mode : {SamplerMode::full, SamplerMode::random}) {
      SubgraphRequest req;
      req.layers = layers;
      req.mode = mode;
      req.k = mode == SamplerMode::full ? 8 : 0;  // full ignores k; random with k = 0 is unlimited
      req.seed = 77;
      const SampledComputation sc = build_computation_subgraph(g, h0, targets, req, nullptr);
      for (const SparseRows& agg : sc.subgraph.aggregations)
        for (std::size_t r = 0; r < agg.rows(); ++r) {
          double s = 0.0;
          for (std::size_t k = agg.offsets[r]; k < agg.offsets[r + 1]; ++k) s += agg.weights[k];
          EXPECT_NEAR(s, 1.0, 1e-9);
        }
      const Matrix sampled = gcn_forward_sampled(p, sc.subgraph, h0);
      const Matrix dense = oracle::full_batch_gcn(p, oracle::dense_normalized(oracle::dense_adjacency(g)), h0);
      const Matrix full = gcn_forward_full(p, full_aggregation(g), h0);
      ASSERT_EQ(sampled.rows(), targets.size());
      for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = 0; j < sampled.cols(); ++j) {
          EXPECT_NEAR(sampled(i, j), dense(targets[i], j), 1e-10);
          EXPECT_NEAR(full(targets[i], j), dense(targets[i], j), 1e-10);
        }
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(SampledGcn, GradientCheckTwoLayers) {
  std::mt19937_64 rng(10);
  const Hypergraph h = oracle::random_hypergraph(rng, {});
  const ExpandedGraph g(h);
  ASSERT_GT(g.num_pairs(), 2u);
  const Matrix h0 = oracle::random_matrix(rng, g.num_pairs(), 3);
  const std::vector<PairId> targets{0, 1};
  SubgraphRequest req;
  req.mode = SamplerMode::random;
  req.k = 3;
  const SampledComputation sc = build_computation_subgraph(g, h0, targets, req, nullptr);
  const ModelParams p = init_glorot(schema_of({3, 4, 3}), 2);
  const std::vector<std::uint32_t> labels{1, 2};
  const LossBuilder f = [&](Tape& t, std::span<const Var> v) {
    return ops::softmax_cross_entropy(t, gcn_forward_sampled(t, as_params(v), sc.subgraph, h0), labels);
  };
  EXPECT_LT(finite_difference_check(f, p.tensor_copies()), 1e-5);

  Tape t;
  const Var y = gcn_forward_sampled(t, register_params(t, p), sc.subgraph, h0);
  EXPECT_EQ(t.value(y), gcn_forward_sampled(p, sc.subgraph, h0));
}

TEST(SampledGcn, DepthAndWidthMismatchThrow) {
  const ExpandedGraph g(th1());
  const LayeredSubgraph sg = assemble_subgraph(g, {0}, {1, 1, 1});
  EXPECT_THROW(gcn_forward_sampled(init_zeros(schema_of({2, 2})), sg, Matrix(4, 2)), ShapeError);
  EXPECT_THROW(gcn_forward_sampled(init_zeros(schema_of({3, 2, 2})), sg, Matrix(4, 2)), ShapeError);
  EXPECT_THROW(gcn_forward_sampled(init_zeros(schema_of({2, 2, 2})), sg, Matrix(0, 2)), ShapeError);
}

TEST(ExpandedConv, ZeroWeightsLeaveBias) {
  const ExpandedGraph g(th1());
  DenseLayer layer{Matrix(2, 2, 1.0), Matrix::from_rows({{-1.0, 2.0}})};
  std::mt19937_64 rng(11);
  const Matrix out = expanded_conv_forward(layer, g, oracle::random_matrix(rng, 4, 2), 0.0, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(out(i, 0), 0.0);
    EXPECT_EQ(out(i, 1), 2.0);
  }
}

TEST(ExpandedConv, SingleEdgeOfTwoByHand) {
  // (0,e): w_e * h_(0,e) + w_v * (h_(0,e) + h_(1,e)) = 2 h_self + h_other.
  const Hypergraph h(2, 1, {{0, 1}}, FeatureMatrix(2, 2), {0, 0});
  const ExpandedGraph g(h);
  DenseLayer layer{Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), Matrix(1, 2)};
  const Matrix x = Matrix::from_rows({{1.0, 2.0}, {10.0, 20.0}});
  const Matrix out = expanded_conv_forward(layer, g, x, 1.0, 1.0, Activation::identity);
  EXPECT_EQ(out, Matrix::from_rows({{12.0, 24.0}, {21.0, 42.0}}));
}

TEST(ExpandedConv, MatchesDenseOracle) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, {});
    const ExpandedGraph g(h);
    if (g.num_pairs() == 0 || g.num_pairs() > 30) continue;
    ++checked;
    const double w_e = 0.25 * (trial % 7), w_v = 1.5 - 0.2 * (trial % 4);
    const DenseLayer layer{oracle::random_matrix(rng, 3, 4), oracle::random_matrix(rng, 1, 4)};
    const Matrix x = oracle::random_matrix(rng, g.num_pairs(), 3);
    const bool relu = trial % 2 == 0;
    const Matrix got =
        expanded_conv_forward(layer, g, x, w_e, w_v, relu ? Activation::relu : Activation::identity);
    EXPECT_LT(max_abs_diff(got, oracle::expanded_conv(g, x, layer.weight, layer.bias, w_e, w_v, relu)), 1e-12);
  }
  EXPECT_GT(checked, 40);
}

TEST(ExpandedConv, ModelGradientCheck) {
  std::mt19937_64 rng(14);
  Hypergraph h = oracle::random_hypergraph(rng, {});
  while (h.num_edges() < 3) h = oracle::random_hypergraph(rng, {});
  const ExpandedGraph g(h);
  const SparseRows conv = expanded_conv_rows(g, 0.7, 1.3);
  const Matrix h0 = oracle::random_matrix(rng, g.num_pairs(), 3, 0.3);
  std::vector<std::uint32_t> labels(g.num_pairs());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i % 3);
  const ModelParams p = init_glorot(schema_of({3, 4, 3}), 6);
  const LossBuilder f = [&](Tape& t, std::span<const Var> v) {
    return ops::softmax_cross_entropy(t, expanded_conv_model_forward(t, as_params(v), conv, t.constant(h0)), labels);
  };
  EXPECT_LT(finite_difference_check(f, p.tensor_copies()), 1e-5);
}

TEST(ExpandedConv, RowMismatchThrows) {
  const DenseLayer layer{Matrix(2, 2), Matrix(1, 2)};
  EXPECT_THROW(expanded_conv_forward(layer, ExpandedGraph(th1()), Matrix(3, 2), 1.0, 1.0), ShapeError);
}

TEST(PredictNodes, SingleCopyKeepsLogits) {
  const Hypergraph h(2, 2, {{0, 1}}, FeatureMatrix(2, 1), {0, 1});
  const ExpandedGraph g(h);
  const Matrix logits = Matrix::from_rows({{0.2, 0.9}, {3.0, -1.0}});
  const NodeScores s = predict_nodes(logits, make_back_projection(h, g));
  EXPECT_EQ(s.scores, logits);
  EXPECT_EQ(s.classes, (std::vector<std::uint32_t>{1, 0}));
}

TEST(PredictNodes, TieGoesToLowerClass) {
  const Hypergraph h = th1();
  const ExpandedGraph g(h);
  const Matrix logits = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}});
  const NodeScores s = predict_nodes(logits, make_back_projection(h, g));
  EXPECT_DOUBLE_EQ(s.scores(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.scores(1, 1), 0.5);
  EXPECT_EQ(s.classes[1], 0u);
  EXPECT_EQ(argmax_row(std::vector<double>{2.0, 2.0, 1.0}), 0u);
}

TEST(PredictNodes, ArgmaxInvariantToPerNodeShift) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, {});
    const ExpandedGraph g(h);
    const BackProjection bp = make_back_projection(h, g);
    Matrix logits = oracle::random_matrix(rng, g.num_pairs(), 3);
    const NodeScores before = predict_nodes(logits, bp);
    for (NodeId v = 0; v < h.num_nodes(); ++v) {
      const double c = std::normal_distribution<double>(0.0, 5.0)(rng);
      for (PairId p : g.copies_of(v))
        for (std::size_t j = 0; j < 3; ++j) logits(p, j) += c;
    }
    EXPECT_EQ(predict_nodes(logits, bp).classes, before.classes);
  }
}

TEST(PredictNodes, RowMismatchThrows) {
  const Hypergraph h = th1();
  EXPECT_THROW(predict_nodes(Matrix(3, 2), make_back_projection(h, ExpandedGraph(h))), ShapeError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testing_support::TempDir dir;
  const ModelParams p = init_glorot(schema_of({7, 5, 3}), 21);
  save_checkpoint(p, dir.path() / "m.hsmp");
  EXPECT_EQ(load_checkpoint(dir.path() / "m.hsmp"), p);

  std::ifstream in(dir.path() / "m.hsmp", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "HSMP");
}

TEST(Checkpoint, MalformedFilesRejected) {
  testing_support::TempDir dir;
  {
    std::ofstream out(dir.path() / "bad.hsmp", std::ios::binary);
    out << "NOPE";
  }
  EXPECT_THROW(load_checkpoint(dir.path() / "bad.hsmp"), ParseError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.hsmp"), ParseError);

  save_checkpoint(init_glorot(schema_of({3, 2}), 1), dir.path() / "ok.hsmp");
  const auto size = std::filesystem::file_size(dir.path() / "ok.hsmp");
  std::filesystem::resize_file(dir.path() / "ok.hsmp", size - 8);
  EXPECT_THROW(load_checkpoint(dir.path() / "ok.hsmp"), ParseError);
}
