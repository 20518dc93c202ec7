#pragma once

// One function per pipeline stage, shared by the command-line tool and the
// Python module. Each writes its artifacts and returns the JSON summary the
// tool prints. Every artifact carries the resolved arguments under "config".

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agr/model.hpp"
#include "agr/pipeline.hpp"
#include "agr/training.hpp"

namespace agr::commands {

struct Common {
  unsigned threads = 1;
  bool force = false;
};

struct PrepareArgs {
  Common common;
  std::string interactions, items, out;
  std::string split = "0.8,0.1,0.1";
  std::string stop_words;
  std::size_t min_users = 10;
  std::size_t price_buckets = 10;
  std::uint64_t seed = 42;
  double holdout_items = 0.0;
  bool description = true;
};

struct ExtractArgs {
  Common common;
  std::string items, out;
  std::string backend = "fixture";  // fixture | http
  std::string fixture;
  std::string backend_config;        // key = value file for http
  std::string base_url, path;
  std::string token_env = "AGR_HTTP_TOKEN";
  std::vector<std::string> kinds = {"item", "aesthetic"};
  int timeout_seconds = 60;
  int retries = 3;
};

struct TrainArgs {
  Common common;
  std::string data, attrs, out;
  std::string log;  // default <out>.log.jsonl
  ModelConfig model;
  TrainOptions train;
  std::size_t checkpoint_every = 0;
  bool item_attributes = true;
  bool aesthetics = true;
};

struct EvaluateArgs {
  Common common;
  std::string model, data;
  std::string attrs;  // default: the extraction file recorded at training time
  std::string out;    // default <model>.<mode>.metrics.json
  std::size_t k = 50;
  bool cold_start = false;
};

struct RecommendArgs {
  Common common;
  std::string model, data, attrs, user;
  std::size_t k = 10;
  bool explain = false;
};

/// "0.8,0.1,0.1" -> ratios; Config error on malformed input.
SplitRatios parse_split(const std::string& text);

// K above this still trains; train() adds a note to its summary.
inline constexpr std::size_t kUsualMaxLayers = 5;

/// A checkpoint bound to the prepared dataset it was trained on.
struct LoadedModel {
  PreparedData data;
  AttributeSets attributes;
  std::unique_ptr<Recommender> model;
  nlohmann::json header;
  std::string checkpoint_hash;
};

/// Rebuilds the training graphs from the inputs recorded in the checkpoint
/// (`attrs` overrides the extraction file). Integrity error when the
/// vocabularies or the prepared dataset differ from training time.
LoadedModel load_model(const std::string& model_path, const std::string& data_dir, const std::string& attrs = {},
                       unsigned threads = 1);

nlohmann::json prepare(const PrepareArgs& args);
nlohmann::json extract(const ExtractArgs& args);
nlohmann::json train(TrainArgs args);
nlohmann::json evaluate(const EvaluateArgs& args);
nlohmann::json recommend(const RecommendArgs& args);

}  // namespace agr::commands
