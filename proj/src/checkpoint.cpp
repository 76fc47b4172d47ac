#include <array>
#include <bit>
#include <fstream>

#include "hypersample/models.hpp"

namespace hypersample {
namespace {

constexpr std::array<char, 4> kMagic{'H', 'S', 'M', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("truncated checkpoint " + path.string(), 0);
  return v;
}

void write_doubles(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_doubles(std::istream& in, Matrix& m, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw ParseError("truncated checkpoint " + path.string(), 0);
}

}  // namespace

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, static_cast<std::uint32_t>(p.num_layers()));
  for (const auto& l : p.layers) {
    write_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    write_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    write_doubles(out, l.weight);
    write_doubles(out, l.bias);
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string(), 0);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError(path.string() + " is not an HSMP checkpoint", 0);
  const std::uint32_t layers = read_u32(in, path);
  ModelParams p;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    if (!p.layers.empty() && p.layers.back().weight.cols() != rows) {
      throw ValidationError("checkpoint layer " + std::to_string(l) + " does not chain with the previous layer");
    }
    DenseLayer layer{Matrix(rows, cols), Matrix(1, cols)};
    read_doubles(in, layer.weight, path);
    read_doubles(in, layer.bias, path);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace hypersample
