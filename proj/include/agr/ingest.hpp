#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agr/types.hpp"
#include "agr/vocabulary.hpp"

namespace agr {

/// Reads `user_id<TAB>item_id` lines. Blank lines are skipped; any other
/// line without exactly two non-empty columns is a Parse error carrying
/// `source` and the 1-based line number. An input with no interactions is
/// also an error.
std::vector<Interaction> parse_interactions(std::istream& in, std::string_view source = "<input>");

/// Keeps interactions whose item has strictly more than `threshold` distinct
/// users. Single pass; order preserved.
std::vector<Interaction> filter_min_popularity(std::span<const Interaction> interactions,
                                               std::size_t threshold);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Split arithmetic: train = round-half-up(n * r_train),
/// validation = floor(n * r_validation), test = the remainder.
/// Throws Config when the ratios do not sum to 1 within 1e-9.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

struct SplitDataset {
  Vocabulary users;
  Vocabulary items;
  std::vector<IndexPair> train;
  std::vector<IndexPair> validation;
  std::vector<IndexPair> test;
  std::vector<std::vector<Index>> user_positives;  // sorted training items per user
  std::uint64_t split_seed = 0;

  bool is_positive(Index user, Index item) const;

  /// Rebuilds user_positives from `train`.
  void index_positives();
};

/// Shuffles with `seed`, cuts per split_sizes(), then moves validation/test
/// interactions of users absent from train into train and refills the
/// shortened split from train with interactions whose user keeps at least one
/// other training interaction. User and item vocabularies follow first
/// appearance in `interactions`.
SplitDataset split_dataset(std::span<const Interaction> interactions, const SplitRatios& ratios,
                           std::uint64_t seed);

struct ItemMetadata {
  std::string item_id;
  std::optional<std::string> brand;
  std::optional<double> price;
  std::optional<std::string> category;
  std::optional<std::string> color;
  std::optional<std::string> description;
  std::optional<std::string> image_ref;
};

/// Parses one JSON object; validates item_id and price.
ItemMetadata parse_item_json(std::string_view line);

/// One JSON object per line; blank lines skipped; errors carry line numbers.
std::vector<ItemMetadata> parse_items(std::istream& in, std::string_view source = "<input>");

std::string item_to_json(const ItemMetadata& item);

struct PriceBuckets {
  std::size_t n_p = 1;
  std::vector<double> boundaries;  // strictly ascending, at most n_p - 1 values

  /// Number of boundaries <= price; always in [0, n_p).
  std::size_t bucket(double price) const;
};

/// Equal-frequency cuts. A cut falling inside a run of equal prices moves up
/// to the end of the run, so equal prices always share a bucket; cuts that
/// run off the end or coincide are dropped.
PriceBuckets fit_price_buckets(std::span<const double> prices, std::size_t n_p);

struct TokenizerOptions {
  bool include_description = true;
  std::set<std::string, std::less<>> stop_words = default_stop_words();

  static std::set<std::string, std::less<>> default_stop_words();
};

/// Namespaced keywords: brand:, price:, category:, color:, desc:.
std::vector<std::string> tokenize_text_attributes(const ItemMetadata& meta,
                                                  const PriceBuckets* buckets,
                                                  const TokenizerOptions& options = {});

/// Splits a description into lowercase alphanumeric tokens (length >= 2,
/// stop words removed), in order, duplicates kept.
std::vector<std::string> tokenize_description(std::string_view description,
                                              const std::set<std::string, std::less<>>& stop_words);

}  // namespace agr
