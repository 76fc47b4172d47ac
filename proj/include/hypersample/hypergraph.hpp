#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hypersample/matrix.hpp"

namespace hypersample {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Node/hyperedge incidence structure with node features and labels.
///
/// Hyperedges are kept as sorted, duplicate-free id arrays. The incidence
/// matrix is never materialized; node-to-hyperedge lists are built once at
/// construction. Instances are immutable.
class Hypergraph {
 public:
  Hypergraph() = default;

  /// Validates every invariant and throws ValidationError naming the first
  /// violation. Member lists need not be sorted on input.
  Hypergraph(std::size_t num_nodes, std::size_t num_classes, std::vector<std::vector<NodeId>> hyperedges,
             FeatureMatrix features, std::vector<std::uint32_t> labels);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t feature_dim() const noexcept { return features_.cols(); }
  std::size_t num_incidences() const noexcept { return num_incidences_; }

  std::span<const NodeId> members(EdgeId e) const { return edges_[e]; }
  const std::vector<std::vector<NodeId>>& hyperedges() const noexcept { return edges_; }
  /// Hyperedges containing v, ascending.
  std::span<const EdgeId> incident_edges(NodeId v) const {
    return {node_edges_.data() + node_offsets_[v], node_offsets_[v + 1] - node_offsets_[v]};
  }

  const FeatureMatrix& features() const noexcept { return features_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }

  friend bool operator==(const Hypergraph& a, const Hypergraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.num_classes_ == b.num_classes_ && a.edges_ == b.edges_ &&
           a.features_ == b.features_ && a.labels_ == b.labels_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::size_t num_classes_ = 0;
  std::size_t num_incidences_ = 0;
  std::vector<std::vector<NodeId>> edges_;
  std::vector<std::size_t> node_offsets_{0};
  std::vector<EdgeId> node_edges_;
  FeatureMatrix features_;
  std::vector<std::uint32_t> labels_;
};

struct DegreeTable {
  std::vector<std::size_t> node_degree;  // d(v)
  std::vector<std::size_t> edge_degree;  // delta(e)
};

DegreeTable compute_degrees(const Hypergraph& h);

struct DatasetSplit {
  std::vector<NodeId> train_ids;
  std::vector<NodeId> val_ids;
  std::vector<NodeId> test_ids;
};

struct SplitRatios {
  double train = 0.4;
  double val = 0.1;
  double test = 0.5;
};

/// Seeded random partition. Train and val sizes are floor(ratio * n); the
/// remainder goes to test.
DatasetSplit split_dataset(const Hypergraph& h, SplitRatios ratios, std::uint64_t seed);

struct SyntheticConfig {
  std::size_t num_nodes = 2000;
  std::size_t num_classes = 4;
  std::size_t edges_per_class = 400;
  std::size_t edge_size = 5;
  double noise_edge_fraction = 0.5;
  std::size_t feature_dim = 16;
  double feature_noise_sigma = 0.5;
};

/// Planted-community hypergraph. Labels are balanced (i mod C, shuffled).
/// Of the edges_per_class * C hyperedges, round(noise_edge_fraction * total)
/// draw members uniformly from all nodes; the rest draw from a single class,
/// classes assigned round-robin. Features are the class one-hot in the first
/// C coordinates plus N(0, sigma^2) on every coordinate.
Hypergraph generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// Reads the JSON hypergraph format. `features` is either an inline array of
/// rows or a path (relative to the JSON file) to an HGF1 binary.
Hypergraph load_hypergraph(const std::filesystem::path& path);

enum class FeatureStorage { inline_json, binary };

/// Writes the JSON format. With FeatureStorage::binary the features go to
/// `<stem>.hgf` next to the JSON file.
void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path,
                     FeatureStorage storage = FeatureStorage::inline_json);

FeatureMatrix read_feature_binary(const std::filesystem::path& path);
void write_feature_binary(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace hypersample
