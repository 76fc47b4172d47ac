#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "hypersample/error.hpp"
#include "hypersample/hypergraph.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace hypersample;

namespace {

Hypergraph th1() {
  return Hypergraph(3, 2, {{0, 1}, {1, 2}}, FeatureMatrix(3, 2, 0.5f), {0, 1, 0});
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(Degrees, TwoEdgePathGraph) {
  const DegreeTable d = compute_degrees(th1());
  EXPECT_EQ(d.node_degree, (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_EQ(d.edge_degree, (std::vector<std::size_t>{2, 2}));
}

TEST(Degrees, SingleTripleEdge) {
  const Hypergraph h(3, 1, {{2, 0, 1}}, FeatureMatrix(3, 1), {0, 0, 0});
  const DegreeTable d = compute_degrees(h);
  EXPECT_EQ(d.node_degree, (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_EQ(d.edge_degree, (std::vector<std::size_t>{3}));
}

TEST(Degrees, NoHyperedges) {
  const Hypergraph h(4, 1, {}, FeatureMatrix(4, 1), {0, 0, 0, 0});
  const DegreeTable d = compute_degrees(h);
  EXPECT_EQ(d.node_degree, (std::vector<std::size_t>(4, 0)));
  EXPECT_TRUE(d.edge_degree.empty());
}

TEST(Degrees, HandshakeIdentityOnRandomHypergraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, {});
    const DegreeTable d = compute_degrees(h);
    const auto sv = std::accumulate(d.node_degree.begin(), d.node_degree.end(), std::size_t{0});
    const auto se = std::accumulate(d.edge_degree.begin(), d.edge_degree.end(), std::size_t{0});
    EXPECT_EQ(sv, se);
    EXPECT_EQ(sv, h.num_incidences());
  }
}

TEST(HypergraphValidation, MembersAreSorted) {
  const Hypergraph h(4, 1, {{3, 1, 2}}, FeatureMatrix(4, 1), {0, 0, 0, 0});
  EXPECT_EQ(std::vector<NodeId>(h.members(0).begin(), h.members(0).end()), (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(h.incident_edges(2).size(), 1u);
}

TEST(HypergraphValidation, RejectsDuplicateMember) {
  try {
    Hypergraph(3, 1, {{0, 0}}, FeatureMatrix(3, 1), {0, 0, 0});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate member in hyperedge"), std::string::npos);
  }
}

TEST(HypergraphValidation, RejectsOutOfRangeNode) {
  try {
    Hypergraph(3, 1, {{0, 7}}, FeatureMatrix(3, 1), {0, 0, 0});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("node id out of range"), std::string::npos);
  }
}

TEST(HypergraphValidation, RejectsSingletonEdge) {
  EXPECT_THROW(Hypergraph(3, 1, {{1}}, FeatureMatrix(3, 1), {0, 0, 0}), ValidationError);
}

TEST(HypergraphValidation, RejectsShapeAndLabelErrors) {
  EXPECT_THROW(Hypergraph(3, 1, {}, FeatureMatrix(2, 1), {0, 0, 0}), ValidationError);
  EXPECT_THROW(Hypergraph(3, 1, {}, FeatureMatrix(3, 1), {0, 0}), ValidationError);
  EXPECT_THROW(Hypergraph(3, 2, {}, FeatureMatrix(3, 1), {0, 2, 0}), ValidationError);
}

TEST(HypergraphIo, LoadsInlineFile) {
  testing_support::TempDir dir;
  const auto path = dir.path() / "g.json";
  write_file(path, R"({"num_nodes": 3, "num_classes": 2, "hyperedges": [[0,1],[1,2]],
                      "labels": [0,1,0], "features": [[1,0],[0,1],[1,1]]})");
  const Hypergraph h = load_hypergraph(path);
  EXPECT_EQ(h.num_nodes(), 3u);
  EXPECT_EQ(h.num_edges(), 2u);
  EXPECT_EQ(h.features()(2, 1), 1.0f);
}

TEST(HypergraphIo, ParseErrorCarriesLineNumber) {
  testing_support::TempDir dir;
  const auto path = dir.path() / "bad.json";
  write_file(path, "{\n  \"num_nodes\": 3,\n  \"num_classes\": 2,\n  oops\n}");
  try {
    load_hypergraph(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(HypergraphIo, ValidationErrorsSurfaceFromFile) {
  testing_support::TempDir dir;
  const auto path = dir.path() / "dup.json";
  write_file(path, R"({"num_nodes": 3, "num_classes": 1, "hyperedges": [[0,0]], "labels": [0,0,0],
                      "features": [[0],[0],[0]]})");
  EXPECT_THROW(load_hypergraph(path), ValidationError);
  write_file(path, R"({"num_nodes": 3, "num_classes": 1, "hyperedges": [], "labels": [0,0,0],
                      "features": [[0],[0],[0]], "extra": 1})");
  EXPECT_THROW(load_hypergraph(path), ValidationError);
}

TEST(HypergraphIo, RoundTripIsBitExactInBothStorages) {
  std::mt19937_64 rng(5);
  testing_support::TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    const Hypergraph h = oracle::random_hypergraph(rng, {});
    for (FeatureStorage storage : {FeatureStorage::inline_json, FeatureStorage::binary}) {
      const auto path = dir.path() / ("h" + std::to_string(trial) + ".json");
      save_hypergraph(h, path, storage);
      EXPECT_EQ(load_hypergraph(path), h);
    }
  }
}

TEST(HypergraphIo, BinaryFeatureHeader) {
  testing_support::TempDir dir;
  const auto path = dir.path() / "x.hgf";
  FeatureMatrix x = FeatureMatrix::from_rows({{1.5f, -2.0f, 0.25f}, {3.0f, 4.0f, 5.0f}});
  write_feature_binary(x, path);
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  EXPECT_EQ(std::string(magic, 4), "HGF1");
  EXPECT_EQ(rows, 2u);
  EXPECT_EQ(cols, 3u);
  EXPECT_EQ(std::filesystem::file_size(path), 12u + 6u * 4u);
  EXPECT_EQ(read_feature_binary(path), x);
}

TEST(Split, ExactFractions) {
  const Hypergraph h(10, 1, {}, FeatureMatrix(10, 1), std::vector<std::uint32_t>(10, 0));
  const DatasetSplit s = split_dataset(h, {0.4, 0.1, 0.5}, 7);
  EXPECT_EQ(s.train_ids.size(), 4u);
  EXPECT_EQ(s.val_ids.size(), 1u);
  EXPECT_EQ(s.test_ids.size(), 5u);
}

TEST(Split, FloorThenRemainderToTest) {
  const Hypergraph h(3, 1, {}, FeatureMatrix(3, 1), {0, 0, 0});
  const DatasetSplit s = split_dataset(h, {0.4, 0.1, 0.5}, 1);
  EXPECT_EQ(s.train_ids.size(), 1u);
  EXPECT_EQ(s.val_ids.size(), 0u);
  EXPECT_EQ(s.test_ids.size(), 2u);
}

TEST(Split, DeterministicPartition) {
  const Hypergraph h(101, 1, {}, FeatureMatrix(101, 1), std::vector<std::uint32_t>(101, 0));
  const DatasetSplit a = split_dataset(h, {}, 3);
  const DatasetSplit b = split_dataset(h, {}, 3);
  EXPECT_EQ(a.train_ids, b.train_ids);
  EXPECT_EQ(a.val_ids, b.val_ids);
  EXPECT_EQ(a.test_ids, b.test_ids);
  std::set<NodeId> all(a.train_ids.begin(), a.train_ids.end());
  all.insert(a.val_ids.begin(), a.val_ids.end());
  all.insert(a.test_ids.begin(), a.test_ids.end());
  EXPECT_EQ(all.size(), 101u);
  EXPECT_EQ(a.train_ids.size() + a.val_ids.size() + a.test_ids.size(), 101u);
  EXPECT_NE(split_dataset(h, {}, 4).train_ids, a.train_ids);
}

TEST(Split, RejectsBadRatios) {
  const Hypergraph h(10, 1, {}, FeatureMatrix(10, 1), std::vector<std::uint32_t>(10, 0));
  EXPECT_THROW(split_dataset(h, {0.5, 0.5, 0.5}, 0), ValidationError);
  EXPECT_THROW(split_dataset(h, {1.2, -0.2, 0.0}, 0), ValidationError);
}

TEST(Synthetic, DeterministicForFixedSeed) {
  const SyntheticConfig cfg;
  EXPECT_EQ(generate_synthetic(cfg, 9), generate_synthetic(cfg, 9));
  EXPECT_FALSE(generate_synthetic(cfg, 9) == generate_synthetic(cfg, 10));
}

TEST(Synthetic, NoNoiseMeansClassPureEdges) {
  SyntheticConfig cfg;
  cfg.num_nodes = 200;
  cfg.edges_per_class = 20;
  cfg.noise_edge_fraction = 0.0;
  const Hypergraph h = generate_synthetic(cfg, 2);
  EXPECT_EQ(h.num_edges(), 80u);
  for (const auto& e : h.hyperedges()) {
    EXPECT_EQ(e.size(), cfg.edge_size);
    for (NodeId v : e) EXPECT_EQ(h.labels()[v], h.labels()[e.front()]);
  }
}

TEST(Synthetic, ZeroSigmaGivesIdenticalClassRows) {
  SyntheticConfig cfg;
  cfg.num_nodes = 100;
  cfg.edges_per_class = 5;
  cfg.feature_noise_sigma = 0.0;
  const Hypergraph h = generate_synthetic(cfg, 4);
  for (NodeId v = 0; v < h.num_nodes(); ++v)
    for (NodeId u = 0; u < h.num_nodes(); ++u)
      if (h.labels()[u] == h.labels()[v]) {
        const auto a = h.features().row(u);
        const auto b = h.features().row(v);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
      }
}

TEST(Synthetic, BalancedLabelsAndNoiseCount) {
  const Hypergraph h = generate_synthetic(SyntheticConfig{}, 1);
  std::vector<std::size_t> count(h.num_classes(), 0);
  for (auto l : h.labels()) ++count[l];
  for (auto c : count) EXPECT_EQ(c, 500u);
  std::size_t mixed = 0;
  for (const auto& e : h.hyperedges()) {
    std::set<std::uint32_t> cls;
    for (NodeId v : e) cls.insert(h.labels()[v]);
    mixed += cls.size() > 1;
  }
  // 800 noise edges; a uniform 5-subset is class-pure with probability < 1%.
  EXPECT_GT(mixed, 750u);
  EXPECT_LE(mixed, 800u);
}

TEST(Synthetic, RejectsClassSmallerThanEdge) {
  SyntheticConfig cfg;
  cfg.num_nodes = 8;
  cfg.num_classes = 4;
  cfg.edge_size = 3;
  EXPECT_THROW(generate_synthetic(cfg, 0), ValidationError);
}
