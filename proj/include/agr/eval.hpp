#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agr/ingest.hpp"
#include "agr/model.hpp"

namespace agr {

struct RankingResult {
  Index user = 0;
  std::vector<Index> ranked;  // candidates by descending score, ties by ascending index
};

/// Sorts `candidates` by `scores` (parallel arrays). Throws Invalid on empty input.
std::vector<Index> rank_by_scores(std::span<const Index> candidates, std::span<const double> scores);

/// Ranks candidates for `user` by inner product of final embeddings.
/// `excluded` (sorted) lists the user's training positives; a candidate in it
/// is a precondition violation.
RankingResult rank_items(Index user, std::span<const Index> candidates, const FinalEmbeddings& embeddings,
                         std::span<const Index> excluded = {});

// Metrics over the first k ranked items; `positives` must be sorted and unique.
double recall_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k);
double precision_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k);
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k);

enum class EvalMode { Standard, ColdStart };

std::string_view mode_label(EvalMode mode) noexcept;

struct MetricsReport {
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  double precision = 0.0;
  std::size_t users = 0;
  EvalMode mode = EvalMode::Standard;
  // Expected Recall@k of a uniformly random ranking over the same candidates.
  double random_recall = 0.0;
};

/// Users with at least one positive among their candidates; candidates are
/// all items minus the user's training positives. Uses `positives` (test by
/// default).
MetricsReport evaluate_standard(const FinalEmbeddings& embeddings, const SplitDataset& data,
                                std::span<const IndexPair> positives, std::size_t k,
                                unsigned threads = 1);
MetricsReport evaluate_standard(const Recommender& model, const SplitDataset& data,
                                std::span<const IndexPair> positives, std::size_t k,
                                unsigned threads = 1);

struct ColdItem {
  std::string item_id;
  std::vector<std::string> keywords;
};

/// Candidates are `cold_items` scored through their attribute keywords; items
/// with no known keyword score 0. `positives` are (user, item) ID pairs; pairs
/// with an unknown user or an item outside `cold_items` are ignored.
MetricsReport evaluate_cold_start(const Recommender& model, std::span<const ColdItem> cold_items,
                                  std::span<const Interaction> positives, std::size_t k,
                                  unsigned threads = 1);

/// Sum with Neumaier compensation, in index order.
double compensated_sum(std::span<const double> values);

}  // namespace agr
