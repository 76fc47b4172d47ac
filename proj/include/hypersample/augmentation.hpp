#pragma once

#include <cstdint>

#include "hypersample/hypergraph.hpp"

namespace hypersample {

struct RhaConfig {
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Random hyperedge augmentation. Each hyperedge e gains
/// min(round(ratio * |e|), |V| - |e|) nodes drawn uniformly without
/// replacement from V \ e. Rounding is half away from zero. Every hyperedge
/// uses its own stream derived from (seed, edge index), so the result does
/// not depend on processing order. Features, labels and node count are kept.
Hypergraph augment(const Hypergraph& h, const RhaConfig& cfg);

}  // namespace hypersample
