#include <array>
#include <bit>
#include <cstring>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hypersample/hypergraph.hpp"

namespace hypersample {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kFeatureMagic{'H', 'G', 'F', '1'};

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t require_count(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ValidationError(std::string("missing required key \"") + key + "\"");
  const json& v = doc.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ValidationError(std::string("\"") + key + "\" must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

FeatureMatrix read_feature_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open feature file " + path.string(), 0);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kFeatureMagic) throw ParseError("feature file " + path.string() + " lacks HGF1 magic", 0);
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  if (!in) throw ParseError("truncated feature header in " + path.string(), 0);
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw ParseError("truncated feature payload in " + path.string(), 0);
  return FeatureMatrix(rows, cols, std::move(data));
}

void write_feature_binary(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write feature file " + path.string());
  out.write(kFeatureMagic.data(), kFeatureMagic.size());
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!out) throw Error("failed writing feature file " + path.string());
}

Hypergraph load_hypergraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hypergraph file " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ParseError("top-level value must be an object", 1);
  for (const auto& [key, _] : doc.items()) {
    if (key != "num_nodes" && key != "num_classes" && key != "hyperedges" && key != "labels" && key != "features") {
      throw ValidationError("unknown key \"" + key + "\"");
    }
  }

  const auto num_nodes = static_cast<std::size_t>(require_count(doc, "num_nodes"));
  const auto num_classes = static_cast<std::size_t>(require_count(doc, "num_classes"));

  std::vector<std::vector<NodeId>> edges;
  if (!doc.contains("hyperedges") || !doc["hyperedges"].is_array()) {
    throw ValidationError("\"hyperedges\" must be an array of id arrays");
  }
  for (const json& e : doc["hyperedges"]) {
    if (!e.is_array()) throw ValidationError("each hyperedge must be an array of node ids");
    std::vector<NodeId> members;
    members.reserve(e.size());
    for (const json& v : e) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ValidationError("node ids must be nonnegative integers");
      const auto id = v.get<std::uint64_t>();
      if (id >= num_nodes) {
        throw ValidationError("node id out of range: " + std::to_string(id) + " >= num_nodes " +
                              std::to_string(num_nodes));
      }
      members.push_back(static_cast<NodeId>(id));
    }
    edges.push_back(std::move(members));
  }

  std::vector<std::uint32_t> labels;
  if (!doc.contains("labels") || !doc["labels"].is_array()) throw ValidationError("\"labels\" must be an array");
  for (const json& l : doc["labels"]) {
    if (!l.is_number_integer() || l.get<std::int64_t>() < 0) throw ValidationError("labels must be nonnegative integers");
    labels.push_back(l.get<std::uint32_t>());
  }

  FeatureMatrix features;
  if (!doc.contains("features")) throw ValidationError("missing required key \"features\"");
  const json& f = doc["features"];
  if (f.is_string()) {
    features = read_feature_binary(path.parent_path() / f.get<std::string>());
  } else if (f.is_array()) {
    const std::size_t cols = f.empty() ? 0 : f.front().size();
    std::vector<float> data;
    data.reserve(f.size() * cols);
    for (const json& row : f) {
      if (!row.is_array() || row.size() != cols) throw ValidationError("inline feature rows must have equal length");
      for (const json& x : row) {
        if (!x.is_number()) throw ValidationError("feature values must be numbers");
        data.push_back(x.get<float>());
      }
    }
    features = FeatureMatrix(f.size(), cols, std::move(data));
  } else {
    throw ValidationError("\"features\" must be an inline array of rows or a relative path string");
  }

  return Hypergraph(num_nodes, num_classes, std::move(edges), std::move(features), std::move(labels));
}

void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path, FeatureStorage storage) {
  json doc;
  doc["num_nodes"] = h.num_nodes();
  doc["num_classes"] = h.num_classes();
  doc["hyperedges"] = h.hyperedges();
  doc["labels"] = h.labels();
  if (storage == FeatureStorage::binary) {
    const std::string name = path.stem().string() + ".hgf";
    write_feature_binary(h.features(), path.parent_path() / name);
    doc["features"] = name;
  } else {
    json rows = json::array();
    for (std::size_t r = 0; r < h.num_nodes(); ++r) {
      const auto row = h.features().row(r);
      rows.push_back(std::vector<float>(row.begin(), row.end()));
    }
    doc["features"] = std::move(rows);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write hypergraph file " + path.string());
  out << doc.dump() << '\n';
}

}  // namespace hypersample
