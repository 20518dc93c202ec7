#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agr/eval.hpp"
#include "agr/extractor.hpp"
#include "agr/graph.hpp"
#include "agr/ingest.hpp"

namespace agr {

// Prepared dataset directory:
//   manifest.json          seed, ratios, counts, config, per-split interaction arrays
//   users.txt, items.txt   vocabularies (one ID per line)
//   text_attributes.tsv    item_id<TAB>keyword from structured item metadata
//   items.jsonl            metadata of every retained item (warm and held out)
struct PrepareOptions {
  std::filesystem::path interactions;
  std::filesystem::path items;  // optional item metadata
  std::filesystem::path out;
  std::size_t min_users = 10;
  SplitRatios ratios;
  std::uint64_t seed = 42;
  std::size_t price_buckets = 10;
  double holdout_items = 0.0;     // fraction of items removed from training entirely
  bool include_description = true;
  std::filesystem::path stop_words;  // optional; one word per line, replaces the built-in list
  bool force = false;
  nlohmann::json resolved_config = nlohmann::json::object();
};

/// parse -> filter -> hold out -> split -> tokenize -> write. Returns the manifest.
nlohmann::json prepare_dataset(const PrepareOptions& options);

struct PreparedData {
  SplitDataset dataset;
  std::vector<Interaction> cold_test;  // interactions on held-out items
  std::vector<std::string> cold_items;
  std::vector<Assignment> text_attributes;
  nlohmann::json manifest;
  std::string dataset_hash;
};

PreparedData load_prepared(const std::filesystem::path& dir);

struct AttributeSets {
  std::vector<Assignment> item;
  std::vector<Assignment> aesthetic;
};

/// Text attributes followed by image keywords, records ordered by
/// (item_id, kind) so that the attribute numbering ignores file line order.
AttributeSets collect_attributes(std::span<const Assignment> text_attributes,
                                 std::span<const ExtractionRecord> records);

struct GraphOptions {
  bool item_attributes = true;
  bool aesthetics = true;
};

/// Graphs over the dataset's users and items. Only training interactions
/// feed the user relations; attribute assignments of unknown items are ignored.
GraphBundle assemble_graphs(const SplitDataset& data, const AttributeSets& attributes,
                            const GraphOptions& options = {});

/// Items without training interactions (known-but-untrained dataset items,
/// then held-out items) with their item keywords.
std::vector<ColdItem> cold_candidates(const PreparedData& data, const AttributeSets& attributes);

/// Test interactions (ID form) plus held-out interactions.
std::vector<Interaction> cold_positives(const PreparedData& data);

nlohmann::json report_to_json(const MetricsReport& report);

std::vector<Interaction> to_interactions(const SplitDataset& data, std::span<const IndexPair> pairs);

}  // namespace agr
