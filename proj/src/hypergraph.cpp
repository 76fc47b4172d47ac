#include "hypersample/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hypersample/rng.hpp"

namespace hypersample {

Hypergraph::Hypergraph(std::size_t num_nodes, std::size_t num_classes, std::vector<std::vector<NodeId>> hyperedges,
                       FeatureMatrix features, std::vector<std::uint32_t> labels)
    : num_nodes_(num_nodes),
      num_classes_(num_classes),
      edges_(std::move(hyperedges)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (features_.rows() != num_nodes_) {
    throw ValidationError("feature row count " + std::to_string(features_.rows()) + " != num_nodes " +
                          std::to_string(num_nodes_));
  }
  if (labels_.size() != num_nodes_) {
    throw ValidationError("label count " + std::to_string(labels_.size()) + " != num_nodes " +
                          std::to_string(num_nodes_));
  }
  for (std::size_t v = 0; v < labels_.size(); ++v) {
    if (labels_[v] >= num_classes_) {
      throw ValidationError("label out of range at node " + std::to_string(v) + ": " + std::to_string(labels_[v]) +
                            " >= num_classes " + std::to_string(num_classes_));
    }
  }

  std::vector<std::size_t> degree(num_nodes_, 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto& members = edges_[e];
    if (members.size() < 2) {
      throw ValidationError("hyperedge " + std::to_string(e) + " has fewer than 2 members");
    }
    for (NodeId v : members) {
      if (v >= num_nodes_) {
        throw ValidationError("node id out of range in hyperedge " + std::to_string(e) + ": " + std::to_string(v) +
                              " >= " + std::to_string(num_nodes_));
      }
    }
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
      throw ValidationError("duplicate member in hyperedge " + std::to_string(e));
    }
    for (NodeId v : members) ++degree[v];
    num_incidences_ += members.size();
  }

  node_offsets_.assign(num_nodes_ + 1, 0);
  for (std::size_t v = 0; v < num_nodes_; ++v) node_offsets_[v + 1] = node_offsets_[v] + degree[v];
  node_edges_.resize(num_incidences_);
  std::vector<std::size_t> cursor(node_offsets_.begin(), node_offsets_.end() - 1);
  for (std::size_t e = 0; e < edges_.size(); ++e)
    for (NodeId v : edges_[e]) node_edges_[cursor[v]++] = static_cast<EdgeId>(e);
}

DegreeTable compute_degrees(const Hypergraph& h) {
  DegreeTable t;
  t.node_degree.resize(h.num_nodes());
  for (std::size_t v = 0; v < h.num_nodes(); ++v) t.node_degree[v] = h.incident_edges(static_cast<NodeId>(v)).size();
  t.edge_degree.reserve(h.num_edges());
  for (const auto& e : h.hyperedges()) t.edge_degree.push_back(e.size());
  return t;
}

DatasetSplit split_dataset(const Hypergraph& h, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) throw ValidationError("split ratios must be >= 0");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  const std::size_t n = h.num_nodes();
  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  Rng rng(derive_seed(seed, {0x5B117}));
  for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);

  // The small epsilon keeps exact products such as 0.4 * 10 from flooring to 3.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n) + 1e-9)));
  DatasetSplit s;
  s.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                   ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return s;
}

}  // namespace hypersample
