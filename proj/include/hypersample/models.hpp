#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hypersample/expansion.hpp"
#include "hypersample/matrix.hpp"
#include "hypersample/tape.hpp"

namespace hypersample {

struct DenseLayer {
  Matrix weight;  // d_in x d_out
  Matrix bias;    // 1 x d_out
};

/// Layer stack shared by the peer MLP, the sampled GCN and the sampler's
/// scoring network. Hidden layers use relu; the last layer is linear.
struct ModelParams {
  std::vector<DenseLayer> layers;

  std::size_t num_layers() const noexcept { return layers.size(); }
  /// Dimension chain d_0, d_1, ..., d_L.
  std::vector<std::size_t> schema() const;
  std::vector<Matrix*> tensors();
  std::vector<Matrix> tensor_copies() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
      if (!(a.layers[i].weight == b.layers[i].weight) || !(a.layers[i].bias == b.layers[i].bias)) return false;
    return true;
  }
};

/// Glorot-uniform weights, zero biases.
ModelParams init_glorot(std::span<const std::size_t> schema, std::uint64_t seed);
ModelParams init_zeros(std::span<const std::size_t> schema);

/// Tape handles for a ModelParams, in tensors() order (w0, b0, w1, b1, ...).
struct ParamVars {
  std::vector<Var> tensors;
  Var weight(std::size_t l) const { return tensors[2 * l]; }
  Var bias(std::size_t l) const { return tensors[2 * l + 1]; }
  std::size_t num_layers() const noexcept { return tensors.size() / 2; }
};

ParamVars register_params(Tape& t, const ModelParams& p);
ParamVars register_constants(Tape& t, const ModelParams& p);
std::vector<Matrix> collect_grads(const Tape& t, const ParamVars& vars);

/// Structure-blind forward: relu hidden layers, linear head.
Var mlp_forward(Tape& t, const ParamVars& p, Var x);
Matrix mlp_forward(const ModelParams& p, const Matrix& x);

/// Deep copy of MLP weights into a GCN of the given schema. Throws
/// ValidationError when the schemas differ.
ModelParams transfer_weights(const ModelParams& mlp, std::span<const std::size_t> gcn_schema);

/// Computation subgraph for one minibatch. `nodes` lists pair ids so that
/// the first hop_sizes[l] entries are the nodes reached within l hops; hop 0
/// is the target set K^0. aggregations[j] (input-first, j = 0..L-1) maps rows
/// of the hop-(L-j) prefix onto the hop-(L-j-1) prefix using local indices.
struct LayeredSubgraph {
  std::vector<PairId> nodes;
  std::vector<std::size_t> hop_sizes;
  std::vector<SparseRows> aggregations;

  std::size_t depth() const noexcept { return aggregations.size(); }
  std::size_t num_targets() const noexcept { return hop_sizes.empty() ? 0 : hop_sizes.front(); }
};

/// Relative weights of the three contributions to an aggregation row before
/// normalization: same-vertex neighbors, same-hyperedge neighbors and the
/// node itself. With w_e = w_v = 1 every entry is 1 and the row is the
/// D~^-1 (A + I) row restricted to the subgraph.
struct AggregationWeights {
  double w_e = 1.0;
  double w_v = 1.0;
  double self() const noexcept { return 0.5 * (w_e + w_v); }
};

/// Builds the row-normalized aggregations for an already chosen node list.
LayeredSubgraph assemble_subgraph(const ExpandedGraph& g, std::vector<PairId> nodes, std::vector<std::size_t> hop_sizes,
                                  AggregationWeights w = {});

/// Row-normalized D~^-1 (A + I) over the whole expanded graph.
SparseRows full_aggregation(const ExpandedGraph& g, AggregationWeights w = {});

/// h_v = act(sum_u A'_{v,u} h_u W + b) per layer; returns logits for the
/// targets in subgraph order.
Var gcn_forward_sampled(Tape& t, const ParamVars& p, const LayeredSubgraph& sg, const Matrix& h0);
Matrix gcn_forward_sampled(const ModelParams& p, const LayeredSubgraph& sg, const Matrix& h0);

/// Same network applied to every pair with the full normalized adjacency.
Matrix gcn_forward_full(const ModelParams& p, const SparseRows& full, const Matrix& h0);

enum class Activation { relu, identity };

/// Unnormalized expanded convolution operator: row (v,e) holds
/// w_e * (same-vertex neighbors + self) + w_v * (same-hyperedge neighbors + self).
SparseRows expanded_conv_rows(const ExpandedGraph& g, double w_e, double w_v);

/// One expanded convolution: act(conv * H * W + b).
Var expanded_conv_forward(Tape& t, Var weight, Var bias, const SparseRows& conv, Var h, Activation act);
Matrix expanded_conv_forward(const DenseLayer& layer, const ExpandedGraph& g, const Matrix& h, double w_e,
                             double w_v, Activation act = Activation::relu);

/// Stack of expanded convolutions with relu between layers and a linear head.
Var expanded_conv_model_forward(Tape& t, const ParamVars& p, const SparseRows& conv, Var h0);

struct NodeScores {
  Matrix scores;                      // num_nodes x C
  std::vector<std::uint32_t> classes;  // argmax, ties to the lower class id
};

/// Back-projects pair logits onto nodes and takes the argmax.
NodeScores predict_nodes(const Matrix& pair_logits, const BackProjection& bp);

std::uint32_t argmax_row(std::span<const double> row);

/// Binary checkpoint: "HSMP", u32 layer count, then per layer u32 rows,
/// u32 cols, rows*cols f64 weights and cols f64 biases, little-endian.
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hypersample
