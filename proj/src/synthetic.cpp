#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hypersample/hypergraph.hpp"
#include "hypersample/rng.hpp"

namespace hypersample {
namespace {

// Draws `count` distinct entries of `pool` by partial Fisher-Yates on a copy.
std::vector<NodeId> draw_distinct(const std::vector<NodeId>& pool, std::size_t count, Rng& rng) {
  std::vector<NodeId> scratch = pool;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, scratch.size() - i));
    std::swap(scratch[i], scratch[j]);
  }
  scratch.resize(count);
  return scratch;
}

}  // namespace

Hypergraph generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.edge_size < 2) throw ValidationError("edge_size must be >= 2");
  if (!(cfg.noise_edge_fraction >= 0.0 && cfg.noise_edge_fraction <= 1.0)) {
    throw ValidationError("noise_edge_fraction must lie in [0, 1]");
  }
  if (cfg.num_classes == 0) throw ValidationError("num_classes must be >= 1");
  if (cfg.feature_dim < cfg.num_classes) throw ValidationError("feature_dim must be >= num_classes");
  if (cfg.feature_noise_sigma < 0.0) throw ValidationError("feature_noise_sigma must be >= 0");

  const std::size_t n = cfg.num_nodes;
  const std::size_t c = cfg.num_classes;

  Rng label_rng(derive_seed(seed, {1}));
  std::vector<std::uint32_t> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<std::uint32_t>(v % c);
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(label_rng, i)]);

  std::vector<std::vector<NodeId>> by_class(c);
  for (std::size_t v = 0; v < n; ++v) by_class[labels[v]].push_back(static_cast<NodeId>(v));
  std::vector<NodeId> everyone(n);
  std::iota(everyone.begin(), everyone.end(), NodeId{0});

  const std::size_t total = cfg.edges_per_class * c;
  const auto num_noise = static_cast<std::size_t>(std::lround(cfg.noise_edge_fraction * static_cast<double>(total)));
  if (n < cfg.edge_size && total > 0) throw ValidationError("fewer nodes than edge_size");

  // Which edge slots are noise: a seeded random subset of exact size.
  std::vector<std::size_t> slots(total);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  Rng slot_rng(derive_seed(seed, {2}));
  for (std::size_t i = total; i > 1; --i) std::swap(slots[i - 1], slots[uniform_index(slot_rng, i)]);
  std::vector<bool> is_noise(total, false);
  for (std::size_t i = 0; i < num_noise; ++i) is_noise[slots[i]] = true;

  if (num_noise < total) {
    for (std::size_t k = 0; k < c; ++k) {
      if (by_class[k].size() < cfg.edge_size) {
        throw ValidationError("class " + std::to_string(k) + " has " + std::to_string(by_class[k].size()) +
                              " members, fewer than edge_size " + std::to_string(cfg.edge_size));
      }
    }
  }

  std::vector<std::vector<NodeId>> edges;
  edges.reserve(total);
  for (std::size_t j = 0; j < total; ++j) {
    Rng rng(derive_seed(seed, {3, j}));
    const auto& pool = is_noise[j] ? everyone : by_class[j % c];
    edges.push_back(draw_distinct(pool, cfg.edge_size, rng));
  }

  FeatureMatrix features(n, cfg.feature_dim);
  Rng feat_rng(derive_seed(seed, {4}));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
      const double proto = d == labels[v] ? 1.0 : 0.0;
      const double eps = cfg.feature_noise_sigma > 0.0 ? cfg.feature_noise_sigma * noise(feat_rng) : 0.0;
      features(v, d) = static_cast<float>(proto + eps);
    }
  }

  return Hypergraph(n, c, std::move(edges), std::move(features), std::move(labels));
}

}  // namespace hypersample
