#include "agr/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "agr/error.hpp"
#include "agr/hash.hpp"

namespace agr {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic = {'A', 'G', 'R', '1'};

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
  }
  return value;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little_endian(v);
}

void write_table(std::ostream& out, const EmbeddingTable& t) {
  std::vector<float> buffer(t.data().size());
  for (std::size_t k = 0; k < buffer.size(); ++k) {
    buffer[k] = to_little_endian(static_cast<float>(t.data()[k]));
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
}

EmbeddingTable read_table(std::istream& in, std::size_t rows, std::size_t dim) {
  std::vector<float> buffer(rows * dim);
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  if (!in) throw Error(ErrorKind::Parse, "checkpoint truncated");
  EmbeddingTable t(rows, dim);
  for (std::size_t k = 0; k < buffer.size(); ++k) t.data()[k] = to_little_endian(buffer[k]);
  return t;
}

}  // namespace

json make_checkpoint_header(const GraphBundle& graphs, const ModelConfig& config) {
  return json{
      {"dim", config.dim},
      {"layers", config.layers},
      {"alpha", config.alpha()},
      {"counts",
       {{"users", graphs.users.size()},
        {"items", graphs.items.size()},
        {"attributes", graphs.attributes.size()},
        {"aesthetics", graphs.aesthetics.size()}}},
      {"vocab_hashes",
       {{"users", to_hex(graphs.users.fingerprint())},
        {"items", to_hex(graphs.items.fingerprint())},
        {"attributes", to_hex(graphs.attributes.fingerprint())},
        {"aesthetics", to_hex(graphs.aesthetics.fingerprint())}}},
      {"seed", config.seed},
      {"model",
       {{"learning_rate", config.learning_rate},
        {"l2_weight", config.l2_weight},
        {"negatives", config.negatives},
        {"price_buckets", config.price_buckets},
        {"init_scale", config.init_scale}}},
  };
}

void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
  const auto header = cp.header.dump();
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_table(out, cp.tables.users);
  write_table(out, cp.tables.items);
  write_table(out, cp.tables.attributes);
  write_table(out, cp.tables.aesthetics);
  if (!out) throw Error(ErrorKind::Io, "checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorKind::Parse, "not an AGR1 checkpoint");
  const auto length = read_u32(in);
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw Error(ErrorKind::Parse, "checkpoint header truncated");

  Checkpoint cp;
  try {
    cp.header = json::parse(text);
    const auto dim = cp.header.at("dim").get<std::size_t>();
    const auto& counts = cp.header.at("counts");
    cp.tables.users = read_table(in, counts.at("users").get<std::size_t>(), dim);
    cp.tables.items = read_table(in, counts.at("items").get<std::size_t>(), dim);
    cp.tables.attributes = read_table(in, counts.at("attributes").get<std::size_t>(), dim);
    cp.tables.aesthetics = read_table(in, counts.at("aesthetics").get<std::size_t>(), dim);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("invalid checkpoint header: ") + e.what());
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_checkpoint(out, cp);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_checkpoint(in);
}

void verify_checkpoint_matches(const json& header, const GraphBundle& graphs) {
  const auto expected = make_checkpoint_header(graphs, ModelConfig{});
  for (const char* key : {"counts", "vocab_hashes"}) {
    if (!header.contains(key) || header.at(key) != expected.at(key)) {
      throw Error(ErrorKind::Integrity,
                  std::string("checkpoint ") + key + " do not match the dataset vocabularies");
    }
  }
}

ModelConfig config_from_header(const json& header) {
  ModelConfig c;
  try {
    c.dim = header.at("dim").get<std::size_t>();
    c.layers = header.at("layers").get<std::size_t>();
    c.layer_weights = header.at("alpha").get<std::vector<double>>();
    c.seed = header.at("seed").get<std::uint64_t>();
    if (auto it = header.find("model"); it != header.end()) {
      c.learning_rate = it->value("learning_rate", c.learning_rate);
      c.l2_weight = it->value("l2_weight", c.l2_weight);
      c.negatives = it->value("negatives", c.negatives);
      c.price_buckets = it->value("price_buckets", c.price_buckets);
      c.init_scale = it->value("init_scale", c.init_scale);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("invalid checkpoint header: ") + e.what());
  }
  return c;
}

}  // namespace agr
