#include "hypersample/models.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "hypersample/ops.hpp"
#include "hypersample/rng.hpp"

namespace hypersample {

std::vector<std::size_t> ModelParams::schema() const {
  std::vector<std::size_t> dims;
  if (layers.empty()) return dims;
  dims.push_back(layers.front().weight.rows());
  for (const auto& l : layers) dims.push_back(l.weight.cols());
  return dims;
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Matrix> ModelParams::tensor_copies() const {
  std::vector<Matrix> out;
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

ModelParams init_glorot(std::span<const std::size_t> schema, std::uint64_t seed) {
  if (schema.size() < 2) throw ValidationError("model schema needs at least input and output dims");
  ModelParams p;
  for (std::size_t l = 0; l + 1 < schema.size(); ++l) {
    const std::size_t in = schema[l], out = schema[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Rng rng(derive_seed(seed, {0x61, l}));
    DenseLayer layer{Matrix(in, out), Matrix(1, out)};
    for (double& w : layer.weight.values()) w = (2.0 * uniform01(rng) - 1.0) * limit;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

ModelParams init_zeros(std::span<const std::size_t> schema) {
  if (schema.size() < 2) throw ValidationError("model schema needs at least input and output dims");
  ModelParams p;
  for (std::size_t l = 0; l + 1 < schema.size(); ++l)
    p.layers.push_back({Matrix(schema[l], schema[l + 1]), Matrix(1, schema[l + 1])});
  return p;
}

ParamVars register_params(Tape& t, const ModelParams& p) {
  ParamVars v;
  for (const auto& l : p.layers) {
    v.tensors.push_back(t.leaf(l.weight));
    v.tensors.push_back(t.leaf(l.bias));
  }
  return v;
}

ParamVars register_constants(Tape& t, const ModelParams& p) {
  ParamVars v;
  for (const auto& l : p.layers) {
    v.tensors.push_back(t.constant(l.weight));
    v.tensors.push_back(t.constant(l.bias));
  }
  return v;
}

std::vector<Matrix> collect_grads(const Tape& t, const ParamVars& vars) {
  std::vector<Matrix> out;
  out.reserve(vars.tensors.size());
  for (Var v : vars.tensors) out.push_back(t.grad(v));
  return out;
}

Var mlp_forward(Tape& t, const ParamVars& p, Var x) {
  if (t.value(x).cols() != t.value(p.weight(0)).rows()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(t.value(x).cols()) + " columns, model expects " +
                     std::to_string(t.value(p.weight(0)).rows()));
  }
  Var h = x;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    h = ops::add_bias(t, ops::matmul(t, h, p.weight(l)), p.bias(l));
    if (l + 1 < p.num_layers()) h = ops::relu(t, h);
  }
  return h;
}

Matrix mlp_forward(const ModelParams& p, const Matrix& x) {
  if (p.layers.empty() || x.cols() != p.layers.front().weight.rows()) {
    throw ShapeError("mlp_forward: input " + shape_string(x) + " does not match model input dim");
  }
  Matrix h = x;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    h = ops::matmul(h, p.layers[l].weight);
    ops::add_bias_inplace(h, p.layers[l].bias);
    if (l + 1 < p.num_layers()) ops::relu_inplace(h);
  }
  return h;
}

ModelParams transfer_weights(const ModelParams& mlp, std::span<const std::size_t> gcn_schema) {
  const auto have = mlp.schema();
  if (!std::equal(have.begin(), have.end(), gcn_schema.begin(), gcn_schema.end())) {
    auto fmt = [](auto dims) {
      std::string s = "(";
      for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
      return s + ")";
    };
    throw ValidationError("weight transfer schema mismatch: MLP " + fmt(have) + " vs GCN " +
                          fmt(std::vector<std::size_t>(gcn_schema.begin(), gcn_schema.end())));
  }
  return mlp;
}

namespace {

void append_row(const ExpandedGraph& g, PairId p, std::uint32_t self_local,
                const std::unordered_map<PairId, std::uint32_t>* local, std::size_t source_size,
                AggregationWeights w, SparseRows& rows) {
  const std::size_t start = rows.cols.size();
  double total = w.self();
  rows.push(self_local, w.self());
  auto add = [&](PairId q, double weight) {
    std::uint32_t idx = q;
    if (local != nullptr) {
      auto it = local->find(q);
      if (it == local->end() || it->second >= source_size) return;
      idx = it->second;
    }
    rows.push(idx, weight);
    total += weight;
  };
  for (PairId q : g.same_vertex_neighbors(p)) add(q, w.w_e);
  for (PairId q : g.same_edge_neighbors(p)) add(q, w.w_v);
  for (std::size_t j = start; j < rows.weights.size(); ++j) rows.weights[j] /= total;
  rows.finish_row();
}

}  // namespace

LayeredSubgraph assemble_subgraph(const ExpandedGraph& g, std::vector<PairId> nodes, std::vector<std::size_t> hop_sizes,
                                  AggregationWeights w) {
  if (hop_sizes.size() < 2) throw ValidationError("subgraph needs at least one hop");
  if (hop_sizes.back() != nodes.size()) throw ValidationError("hop sizes do not cover the node list");
  std::unordered_map<PairId, std::uint32_t> local;
  local.reserve(nodes.size() * 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_pairs()) throw ValidationError("subgraph references a pair outside the expanded graph");
    if (!local.emplace(nodes[i], static_cast<std::uint32_t>(i)).second) {
      throw ValidationError("subgraph lists a pair twice");
    }
  }
  LayeredSubgraph sg;
  const std::size_t depth = hop_sizes.size() - 1;
  for (std::size_t j = 0; j < depth; ++j) {
    const std::size_t dst = hop_sizes[depth - 1 - j];
    const std::size_t src = hop_sizes[depth - j];
    SparseRows rows;
    rows.num_cols = src;
    for (std::size_t i = 0; i < dst; ++i)
      append_row(g, nodes[i], static_cast<std::uint32_t>(i), &local, src, w, rows);
    sg.aggregations.push_back(std::move(rows));
  }
  sg.nodes = std::move(nodes);
  sg.hop_sizes = std::move(hop_sizes);
  return sg;
}

SparseRows full_aggregation(const ExpandedGraph& g, AggregationWeights w) {
  SparseRows rows;
  rows.num_cols = g.num_pairs();
  for (std::size_t i = 0; i < g.num_pairs(); ++i)
    append_row(g, static_cast<PairId>(i), static_cast<std::uint32_t>(i), nullptr, 0, w, rows);
  return rows;
}

Var gcn_forward_sampled(Tape& t, const ParamVars& p, const LayeredSubgraph& sg, const Matrix& h0) {
  if (sg.depth() != p.num_layers()) {
    throw ShapeError("gcn_forward_sampled: subgraph depth " + std::to_string(sg.depth()) + " != model layers " +
                     std::to_string(p.num_layers()));
  }
  if (h0.cols() != t.value(p.weight(0)).rows()) {
    throw ShapeError("gcn_forward_sampled: feature dim " + std::to_string(h0.cols()) + " != weight rows " +
                     std::to_string(t.value(p.weight(0)).rows()));
  }
  Matrix gathered(sg.nodes.size(), h0.cols());
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
    if (sg.nodes[i] >= h0.rows()) throw ShapeError("gcn_forward_sampled: missing feature row for pair " + std::to_string(sg.nodes[i]));
    const auto src = h0.row(sg.nodes[i]);
    std::copy(src.begin(), src.end(), gathered.row(i).begin());
  }
  Var h = t.constant(std::move(gathered));
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    h = ops::sparse_neighbor_aggregate(t, h, sg.aggregations[l]);
    h = ops::add_bias(t, ops::matmul(t, h, p.weight(l)), p.bias(l));
    if (l + 1 < p.num_layers()) h = ops::relu(t, h);
  }
  return h;
}

Matrix gcn_forward_sampled(const ModelParams& p, const LayeredSubgraph& sg, const Matrix& h0) {
  Tape t;
  const ParamVars vars = register_constants(t, p);
  return t.value(gcn_forward_sampled(t, vars, sg, h0));
}

Matrix gcn_forward_full(const ModelParams& p, const SparseRows& full, const Matrix& h0) {
  Matrix h = h0;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    h = ops::matmul(sparse_multiply(full, h), p.layers[l].weight);
    ops::add_bias_inplace(h, p.layers[l].bias);
    if (l + 1 < p.num_layers()) ops::relu_inplace(h);
  }
  return h;
}

SparseRows expanded_conv_rows(const ExpandedGraph& g, double w_e, double w_v) {
  SparseRows rows;
  rows.num_cols = g.num_pairs();
  for (std::size_t i = 0; i < g.num_pairs(); ++i) {
    const auto p = static_cast<PairId>(i);
    rows.push(p, w_e + w_v);
    for (PairId q : g.same_vertex_neighbors(p)) rows.push(q, w_e);
    for (PairId q : g.same_edge_neighbors(p)) rows.push(q, w_v);
    rows.finish_row();
  }
  return rows;
}

Var expanded_conv_forward(Tape& t, Var weight, Var bias, const SparseRows& conv, Var h, Activation act) {
  if (t.value(h).rows() != conv.num_cols) {
    throw ShapeError("expanded_conv_forward: expected " + std::to_string(conv.num_cols) + " pair rows, got " +
                     std::to_string(t.value(h).rows()));
  }
  Var out = ops::add_bias(t, ops::matmul(t, ops::sparse_neighbor_aggregate(t, h, conv), weight), bias);
  return act == Activation::relu ? ops::relu(t, out) : out;
}

Matrix expanded_conv_forward(const DenseLayer& layer, const ExpandedGraph& g, const Matrix& h, double w_e, double w_v,
                             Activation act) {
  const SparseRows conv = expanded_conv_rows(g, w_e, w_v);
  if (h.rows() != conv.num_cols) {
    throw ShapeError("expanded_conv_forward: expected " + std::to_string(conv.num_cols) + " pair rows, got " +
                     std::to_string(h.rows()));
  }
  // Same arithmetic as the taped path without copying h onto a tape.
  Matrix out = ops::matmul(sparse_multiply(conv, h), layer.weight);
  ops::add_bias_inplace(out, layer.bias);
  if (act == Activation::relu) ops::relu_inplace(out);
  return out;
}

Var expanded_conv_model_forward(Tape& t, const ParamVars& p, const SparseRows& conv, Var h0) {
  Var h = h0;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const Activation act = l + 1 < p.num_layers() ? Activation::relu : Activation::identity;
    h = expanded_conv_forward(t, p.weight(l), p.bias(l), conv, h, act);
  }
  return h;
}

std::uint32_t argmax_row(std::span<const double> row) {
  std::uint32_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = static_cast<std::uint32_t>(j);
  return best;
}

NodeScores predict_nodes(const Matrix& pair_logits, const BackProjection& bp) {
  if (pair_logits.rows() != bp.rows.num_cols) {
    throw ShapeError("predict_nodes: expected logits for " + std::to_string(bp.rows.num_cols) + " pairs, got " +
                     std::to_string(pair_logits.rows()));
  }
  NodeScores out{sparse_multiply(bp.rows, pair_logits), {}};
  out.classes.reserve(out.scores.rows());
  for (std::size_t v = 0; v < out.scores.rows(); ++v) out.classes.push_back(argmax_row(out.scores.row(v)));
  return out;
}

}  // namespace hypersample
