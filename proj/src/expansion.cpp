#include "hypersample/expansion.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace hypersample {

ExpandedGraph::ExpandedGraph(const Hypergraph& h) {
  const std::size_t n = h.num_nodes();
  pairs_.reserve(h.num_incidences());
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    for (NodeId v : h.members(static_cast<EdgeId>(e))) pairs_.push_back({v, static_cast<EdgeId>(e)});
    edge_offsets_.push_back(pairs_.size());
  }

  // Copies per node, in ascending hyperedge order (the enumeration order).
  copy_offsets_.assign(n + 1, 0);
  for (const auto& p : pairs_) ++copy_offsets_[p.node + 1];
  for (std::size_t v = 0; v < n; ++v) copy_offsets_[v + 1] += copy_offsets_[v];
  copies_.resize(pairs_.size());
  {
    std::vector<std::size_t> cursor(copy_offsets_.begin(), copy_offsets_.end() - 1);
    for (std::size_t i = 0; i < pairs_.size(); ++i) copies_[cursor[pairs_[i].node]++] = static_cast<PairId>(i);
  }

  split_.resize(pairs_.size());
  offsets_.reserve(pairs_.size() + 1);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto [v, e] = pairs_[i];
    for (PairId c : copies_of(v))
      if (c != i) neighbors_.push_back(c);
    split_[i] = neighbors_.size();
    for (std::size_t j = edge_offsets_[e]; j < edge_offsets_[e + 1]; ++j)
      if (j != i) neighbors_.push_back(static_cast<PairId>(j));
    offsets_.push_back(neighbors_.size());
    max_degree_ = std::max(max_degree_, offsets_[i + 1] - offsets_[i]);
  }
}

void ExpandedGraph::write_edge_list(std::ostream& out) const {
  out << "# pairs " << pairs_.size() << '\n';
  for (std::size_t i = 0; i < pairs_.size(); ++i) out << "# " << i << ' ' << pairs_[i].node << ' ' << pairs_[i].edge << '\n';
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    for (PairId w : neighbors(static_cast<PairId>(i)))
      if (i < w) out << i << ' ' << w << '\n';
}

BackProjection make_back_projection(const Hypergraph& h, const ExpandedGraph& g) {
  BackProjection bp;
  bp.rows.num_cols = g.num_pairs();
  bp.rows.offsets.reserve(h.num_nodes() + 1);
  for (std::size_t v = 0; v < h.num_nodes(); ++v) {
    const auto copies = g.copies_of(static_cast<NodeId>(v));
    double total = 0.0;
    for (PairId p : copies) total += 1.0 / static_cast<double>(h.members(g.edge_of(p)).size());
    for (PairId p : copies) bp.rows.push(p, (1.0 / static_cast<double>(h.members(g.edge_of(p)).size())) / total);
    bp.rows.finish_row();
  }
  return bp;
}

Matrix project_features(const ExpandedGraph& g, const Matrix& x) {
  if (x.rows() != g.num_source_nodes()) {
    throw ShapeError("project_features: expected " + std::to_string(g.num_source_nodes()) + " feature rows, got " +
                     std::to_string(x.rows()));
  }
  Matrix out(g.num_pairs(), x.cols());
  for (std::size_t i = 0; i < g.num_pairs(); ++i) {
    const auto src = x.row(g.vertex_of(static_cast<PairId>(i)));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix back_project(const BackProjection& bp, const Matrix& h) {
  if (h.rows() != bp.rows.num_cols) {
    throw ShapeError("back_project: expected " + std::to_string(bp.rows.num_cols) + " pair rows, got " +
                     std::to_string(h.rows()));
  }
  return sparse_multiply(bp.rows, h);
}

Matrix clique_expansion_propagate(const Hypergraph& h, const Matrix& x) {
  if (x.rows() != h.num_nodes()) {
    throw ShapeError("clique_expansion_propagate: expected " + std::to_string(h.num_nodes()) + " rows, got " +
                     std::to_string(x.rows()));
  }
  const std::size_t d = x.cols();
  Matrix edge_sum(h.num_edges(), d);
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    auto dst = edge_sum.row(e);
    for (NodeId u : h.members(static_cast<EdgeId>(e))) {
      const auto src = x.row(u);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  }
  Matrix out(h.num_nodes(), d);
  for (std::size_t v = 0; v < h.num_nodes(); ++v) {
    auto dst = out.row(v);
    for (EdgeId e : h.incident_edges(static_cast<NodeId>(v))) {
      const auto src = edge_sum.row(e);
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  }
  return out;
}

}  // namespace hypersample
