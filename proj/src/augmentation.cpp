#include "hypersample/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hypersample/rng.hpp"

namespace hypersample {

Hypergraph augment(const Hypergraph& h, const RhaConfig& cfg) {
  if (!(cfg.ratio >= 0.0)) throw ValidationError("augmentation ratio must be >= 0");
  const std::size_t n = h.num_nodes();
  std::vector<std::vector<NodeId>> edges = h.hyperedges();
  if (cfg.ratio == 0.0) {
    return Hypergraph(n, h.num_classes(), std::move(edges), h.features(), h.labels());
  }

  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto& members = edges[e];
    const std::size_t size = members.size();
    const std::size_t complement = n - size;
    const auto wanted = static_cast<std::size_t>(std::lround(cfg.ratio * static_cast<double>(size)));
    const std::size_t add = std::min(wanted, complement);
    if (add == 0) continue;

    Rng rng(derive_seed(cfg.seed, {0xA06, e}));
    if (2 * add <= complement) {
      // Sparse case: rejection against the current membership.
      std::unordered_set<NodeId> taken(members.begin(), members.end());
      while (taken.size() < size + add) {
        const auto v = static_cast<NodeId>(uniform_index(rng, n));
        if (taken.insert(v).second) members.push_back(v);
      }
    } else {
      std::vector<NodeId> pool;
      pool.reserve(complement);
      for (NodeId v = 0, j = 0; v < n; ++v) {
        if (j < size && members[j] == v) {
          ++j;
          continue;
        }
        pool.push_back(v);
      }
      for (std::size_t i = 0; i < add; ++i) {
        const std::size_t k = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[k]);
        members.push_back(pool[i]);
      }
    }
  }
  return Hypergraph(n, h.num_classes(), std::move(edges), h.features(), h.labels());
}

}  // namespace hypersample
