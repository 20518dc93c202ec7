#include "agr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agr/error.hpp"
#include "parallel.hpp"

namespace agr {
namespace {

std::size_t hits_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k) {
  const auto n = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(positives.begin(), positives.end(), ranked[r])) ++hits;
  }
  return hits;
}

struct UserMetrics {
  double recall = 0, ndcg = 0, precision = 0, random_recall = 0;
  bool eligible = false;
};

MetricsReport aggregate(const std::vector<UserMetrics>& per_user, std::size_t k, EvalMode mode) {
  std::vector<double> recall, ndcg, precision, random;
  for (const auto& m : per_user) {
    if (!m.eligible) continue;
    recall.push_back(m.recall);
    ndcg.push_back(m.ndcg);
    precision.push_back(m.precision);
    random.push_back(m.random_recall);
  }
  MetricsReport report;
  report.k = k;
  report.mode = mode;
  report.users = recall.size();
  if (report.users == 0) return report;
  const double n = static_cast<double>(report.users);
  report.recall = compensated_sum(recall) / n;
  report.ndcg = compensated_sum(ndcg) / n;
  report.precision = compensated_sum(precision) / n;
  report.random_recall = compensated_sum(random) / n;
  return report;
}

UserMetrics score_user(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k,
                       std::size_t candidates) {
  UserMetrics m;
  if (positives.empty()) return m;
  m.eligible = true;
  m.recall = recall_at_k(ranked, positives, k);
  m.ndcg = ndcg_at_k(ranked, positives, k);
  m.precision = precision_at_k(ranked, positives, k);
  m.random_recall = static_cast<double>(std::min(k, candidates)) / static_cast<double>(candidates);
  return m;
}

}  // namespace

std::vector<Index> rank_by_scores(std::span<const Index> candidates, std::span<const double> scores) {
  if (candidates.empty()) throw Error(ErrorKind::Invalid, "empty candidate set");
  if (candidates.size() != scores.size()) throw Error(ErrorKind::Invalid, "score count mismatch");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::vector<Index> ranked(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = candidates[order[r]];
  return ranked;
}

RankingResult rank_items(Index user, std::span<const Index> candidates, const FinalEmbeddings& embeddings,
                         std::span<const Index> excluded) {
  std::vector<double> scores(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (std::binary_search(excluded.begin(), excluded.end(), candidates[c])) {
      throw Error(ErrorKind::Invalid, "candidate " + std::to_string(candidates[c]) +
                                          " is a training positive of user " + std::to_string(user));
    }
    scores[c] = score(embeddings.users.row(user), embeddings.items.row(candidates[c]));
  }
  return {user, rank_by_scores(candidates, scores)};
}

double recall_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k) {
  if (positives.empty()) throw Error(ErrorKind::Invalid, "recall needs at least one positive");
  return static_cast<double>(hits_at_k(ranked, positives, k)) / static_cast<double>(positives.size());
}

double precision_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::Invalid, "k must be >= 1");
  return static_cast<double>(hits_at_k(ranked, positives, k)) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> positives, std::size_t k) {
  if (positives.empty()) throw Error(ErrorKind::Invalid, "ndcg needs at least one positive");
  double dcg = 0.0;
  const auto n = std::min(k, ranked.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(positives.begin(), positives.end(), ranked[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min(k, positives.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

std::string_view mode_label(EvalMode mode) noexcept {
  return mode == EvalMode::Standard ? "standard" : "cold_start";
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0, compensation = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

MetricsReport evaluate_standard(const Recommender& model, const SplitDataset& data,
                                std::span<const IndexPair> positives, std::size_t k, unsigned threads) {
  if (!(model.graphs().users == data.users) || !(model.graphs().items == data.items)) {
    throw Error(ErrorKind::Integrity, "model and dataset vocabularies differ");
  }
  return evaluate_standard(model.embeddings(), data, positives, k, threads);
}

MetricsReport evaluate_standard(const FinalEmbeddings& emb, const SplitDataset& data,
                                std::span<const IndexPair> positives, std::size_t k, unsigned threads) {
  if (k == 0) throw Error(ErrorKind::Config, "k must be >= 1");
  const auto n_users = data.users.size();
  const auto n_items = data.items.size();
  if (emb.users.rows() != n_users || emb.items.rows() != n_items) {
    throw Error(ErrorKind::Integrity, "embedding shapes do not match the dataset");
  }

  std::vector<std::vector<Index>> user_test(n_users);
  for (const auto& p : positives) {
    if (!data.is_positive(p.user, p.item)) user_test[p.user].push_back(p.item);
  }
  std::vector<UserMetrics> per_user(n_users);

  detail::parallel_for(n_users, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Index> candidates;
    for (auto u = static_cast<Index>(begin); u < end; ++u) {
      auto& pos = user_test[u];
      if (pos.empty()) continue;
      std::sort(pos.begin(), pos.end());
      pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
      const auto& train = data.user_positives[u];
      candidates.clear();
      for (Index i = 0; i < n_items; ++i) {
        if (!std::binary_search(train.begin(), train.end(), i)) candidates.push_back(i);
      }
      const auto result = rank_items(u, candidates, emb, train);
      per_user[u] = score_user(result.ranked, pos, k, candidates.size());
    }
  });
  return aggregate(per_user, k, EvalMode::Standard);
}

MetricsReport evaluate_cold_start(const Recommender& model, std::span<const ColdItem> cold_items,
                                  std::span<const Interaction> positives, std::size_t k, unsigned threads) {
  if (k == 0) throw Error(ErrorKind::Config, "k must be >= 1");
  const auto& users = model.graphs().users;
  const auto dim = model.config().dim;

  // Cold candidates live in their own index space 0..n-1, in the given order.
  Vocabulary cold_vocab;
  EmbeddingTable cold_table(cold_items.size(), dim);
  for (const auto& item : cold_items) {
    const Index c = cold_vocab.intern(item.item_id);
    if (c + 1 != cold_vocab.size()) throw Error(ErrorKind::Invalid, "duplicate cold item " + item.item_id);
    if (auto v = model.cold_item(item.keywords)) std::copy(v->begin(), v->end(), cold_table.row(c).begin());
  }

  std::vector<std::vector<Index>> user_pos(users.size());
  for (const auto& p : positives) {
    auto u = users.find(p.user_id);
    auto c = cold_vocab.find(p.item_id);
    if (u && c) user_pos[*u].push_back(*c);
  }

  std::vector<Index> candidates(cold_items.size());
  std::iota(candidates.begin(), candidates.end(), Index{0});
  std::vector<UserMetrics> per_user(users.size());
  const auto& emb = model.embeddings();

  detail::parallel_for(users.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(candidates.size());
    for (auto u = static_cast<Index>(begin); u < end; ++u) {
      auto& pos = user_pos[u];
      if (pos.empty()) continue;
      std::sort(pos.begin(), pos.end());
      pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        scores[c] = score(emb.users.row(u), cold_table.row(c));
      }
      const auto ranked = rank_by_scores(candidates, scores);
      per_user[u] = score_user(ranked, pos, k, candidates.size());
    }
  });
  return aggregate(per_user, k, EvalMode::ColdStart);
}

}  // namespace agr
