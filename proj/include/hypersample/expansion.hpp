#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hypersample/hypergraph.hpp"
#include "hypersample/matrix.hpp"

namespace hypersample {

using PairId = std::uint32_t;

struct IncidencePair {
  NodeId node;
  EdgeId edge;
  friend bool operator==(const IncidencePair&, const IncidencePair&) = default;
};

/// Hyperedge-dependent expansion: one vertex per (node, hyperedge) incidence,
/// adjacent iff the two pairs share the node or share the hyperedge.
///
/// Pairs are numbered hyperedge-major, members ascending, so the pairs of
/// hyperedge e occupy a contiguous range. Each pair's neighbor list is stored
/// as two segments: same-vertex neighbors (other copies of the node), then
/// same-hyperedge neighbors (other members of the edge). No self entries.
class ExpandedGraph {
 public:
  ExpandedGraph() = default;
  explicit ExpandedGraph(const Hypergraph& h);

  std::size_t num_pairs() const noexcept { return pairs_.size(); }
  std::size_t num_source_nodes() const noexcept { return copy_offsets_.size() - 1; }
  std::size_t num_source_edges() const noexcept { return edge_offsets_.size() - 1; }
  /// Undirected expanded edges |E_l|.
  std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }

  const std::vector<IncidencePair>& pairs() const noexcept { return pairs_; }
  NodeId vertex_of(PairId p) const { return pairs_[p].node; }
  EdgeId edge_of(PairId p) const { return pairs_[p].edge; }

  std::span<const PairId> copies_of(NodeId v) const {
    return {copies_.data() + copy_offsets_[v], copy_offsets_[v + 1] - copy_offsets_[v]};
  }
  /// First pair of hyperedge e; its members are [edge_begin(e), edge_begin(e+1)).
  PairId edge_begin(EdgeId e) const { return static_cast<PairId>(edge_offsets_[e]); }

  std::span<const PairId> neighbors(PairId p) const {
    return {neighbors_.data() + offsets_[p], offsets_[p + 1] - offsets_[p]};
  }
  std::span<const PairId> same_vertex_neighbors(PairId p) const {
    return {neighbors_.data() + offsets_[p], split_[p] - offsets_[p]};
  }
  std::span<const PairId> same_edge_neighbors(PairId p) const {
    return {neighbors_.data() + split_[p], offsets_[p + 1] - split_[p]};
  }
  std::size_t degree(PairId p) const { return offsets_[p + 1] - offsets_[p]; }
  std::size_t max_degree() const noexcept { return max_degree_; }

  /// Text dump: `# pairs` header with one `# i v e` line per pair, then one
  /// `u w` line per undirected edge with u < w.
  void write_edge_list(std::ostream& out) const;

 private:
  std::vector<IncidencePair> pairs_;
  std::vector<std::size_t> edge_offsets_{0};
  std::vector<std::size_t> copy_offsets_{0};
  std::vector<PairId> copies_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> split_;
  std::vector<PairId> neighbors_;
  std::size_t max_degree_ = 0;
};

/// Convex weights mapping pair rows back to node rows:
/// w(v, (v,e)) = (1/delta(e)) / sum over copies (v,e') of 1/delta(e').
/// Nodes without copies get an empty row.
struct BackProjection {
  SparseRows rows;  // num_nodes x num_pairs
};

BackProjection make_back_projection(const Hypergraph& h, const ExpandedGraph& g);

/// H0 = P_vertex X: row (v,e) is a copy of X row v.
Matrix project_features(const ExpandedGraph& g, const Matrix& x);

/// Y = P'_vertex H.
Matrix back_project(const BackProjection& bp, const Matrix& h);

/// Unnormalized clique-expansion step X'_v = sum_{e ∋ v} sum_{u ∈ e} X_u.
Matrix clique_expansion_propagate(const Hypergraph& h, const Matrix& x);

}  // namespace hypersample
