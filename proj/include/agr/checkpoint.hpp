#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "agr/model.hpp"

namespace agr {

// Binary layout:
//   "AGR1"
//   u32 little-endian header length, then that many bytes of JSON
//   users, items, attributes, aesthetics tables as float32 little-endian,
//   row-major, shapes given by header.counts and header.dim
struct Checkpoint {
  nlohmann::json header;
  EmbeddingTables tables;
};

/// Header with dim, layers, alpha, counts, vocab hashes, and seed; callers
/// may add fields (the resolved run config goes under "config").
nlohmann::json make_checkpoint_header(const GraphBundle& graphs, const ModelConfig& config);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws Integrity when the header's counts or vocab hashes differ from `graphs`.
void verify_checkpoint_matches(const nlohmann::json& header, const GraphBundle& graphs);

/// Model config stored in a header.
ModelConfig config_from_header(const nlohmann::json& header);

}  // namespace agr
