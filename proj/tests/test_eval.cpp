#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "agr/error.hpp"
#include "agr/eval.hpp"
#include "agr/pipeline.hpp"
#include "agr/planted.hpp"
#include "oracles.hpp"

using namespace agr;

namespace {

std::vector<Index> iota(std::size_t n) {
  std::vector<Index> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("rank_by_scores orders by score then index") {
  const std::vector<Index> cand = {1, 2};
  const std::vector<double> s = {0.9, 0.1};
  CHECK(rank_by_scores(cand, s) == std::vector<Index>{1, 2});

  const std::vector<Index> tied = {7, 3, 5, 1};
  const std::vector<double> zero(4, 0.0);
  CHECK(rank_by_scores(tied, zero) == std::vector<Index>{1, 3, 5, 7});

  const std::vector<Index> mixed = {4, 2, 9, 0};
  const std::vector<double> ms = {1.0, 2.0, 1.0, 2.0};
  CHECK(rank_by_scores(mixed, ms) == std::vector<Index>{0, 2, 4, 9});

  CHECK_THROWS_AS(rank_by_scores({}, {}), Error);
}

TEST_CASE("rank_items rejects training positives among candidates") {
  FinalEmbeddings f{EmbeddingTable(1, 2), EmbeddingTable(4, 2)};
  const std::vector<Index> cand = {0, 1, 2};
  const std::vector<Index> excluded = {2};
  CHECK_THROWS_AS(rank_items(0, cand, f, excluded), Error);
  const std::vector<Index> ok = {0, 1, 3};
  CHECK(rank_items(0, ok, f, excluded).ranked == ok);
}

TEST_CASE("metric examples") {
  const std::vector<Index> ranked = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  const std::vector<Index> five = {11, 13, 30, 31, 32};
  CHECK(recall_at_k(ranked, five, 5) == doctest::Approx(0.4).epsilon(1e-15));

  std::vector<Index> fifty = iota(50);
  const std::vector<Index> two_hits = {3, 7, 100};
  CHECK(precision_at_k(fifty, two_hits, 50) == doctest::Approx(0.04).epsilon(1e-15));
  const std::vector<Index> miss = {100};
  CHECK(precision_at_k(fifty, miss, 50) == 0.0);

  const std::vector<Index> first = {10};
  CHECK(ndcg_at_k(ranked, first, 10) == 1.0);
  const std::vector<Index> second = {11};
  CHECK(ndcg_at_k(ranked, second, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
  CHECK(ndcg_at_k(ranked, second, 10) == doctest::Approx(0.63093).epsilon(1e-5));
  CHECK(ndcg_at_k(ranked, miss, 10) == 0.0);

  const std::vector<Index> all = {10, 11, 12};
  CHECK(recall_at_k(ranked, all, 3) == 1.0);
  CHECK(ndcg_at_k(ranked, all, 3) == 1.0);
}

TEST_CASE("metrics agree with brute force on random instances") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 2 + rng.uniform_index(60);
    auto ranked = iota(n);
    rng.shuffle(std::span<Index>(ranked));
    std::set<Index> pos;
    const auto np = 1 + rng.uniform_index(n);
    while (pos.size() < np) pos.insert(static_cast<Index>(rng.uniform_index(n)));
    const std::vector<Index> pv(pos.begin(), pos.end());
    const auto k = 1 + rng.uniform_index(n);
    const double r = recall_at_k(ranked, pv, k), p = precision_at_k(ranked, pv, k), g = ndcg_at_k(ranked, pv, k);
    CHECK(std::abs(r - oracle::brute_recall(ranked, pos, k)) <= 1e-12);
    CHECK(std::abs(p - oracle::brute_precision(ranked, pos, k)) <= 1e-12);
    CHECK(std::abs(g - oracle::brute_ndcg(ranked, pos, k)) <= 1e-12);
    CHECK(r * pv.size() == doctest::Approx(p * k).epsilon(1e-12));
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 + 1e-15);
  }
}

TEST_CASE("metrics are invariant under monotone score transforms") {
  Rng rng(2);
  const auto cand = iota(30);
  std::vector<double> s(30), t(30);
  for (std::size_t k = 0; k < 30; ++k) {
    s[k] = rng.normal();
    t[k] = std::exp(3 * s[k]) + 1;
  }
  CHECK(rank_by_scores(cand, s) == rank_by_scores(cand, t));
}

TEST_CASE("compensated sum") {
  const std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(v) == 2.0);
}

TEST_CASE("a perfect ranker scores 1 and a random ranker scores about k/|items|") {
  const auto world = make_planted_world({});
  const auto data = split_dataset(world.interactions, {}, 3);

  // Perfect: user embedding one-hot over items, item rows one-hot; test items score 1.
  const auto nu = data.users.size(), ni = data.items.size();
  FinalEmbeddings perfect{EmbeddingTable(nu, ni), EmbeddingTable(ni, ni)};
  for (Index i = 0; i < ni; ++i) perfect.items.row(i)[i] = 1.0;
  for (const auto& p : data.test) perfect.users.row(p.user)[p.item] = 1.0;
  std::size_t max_test_per_user = 0;
  std::vector<std::size_t> per_user(nu);
  for (const auto& p : data.test) max_test_per_user = std::max(max_test_per_user, ++per_user[p.user]);
  const auto best = evaluate_standard(perfect, data, data.test, max_test_per_user);
  CHECK(best.recall == 1.0);
  CHECK(best.ndcg == 1.0);

  // Random: Gaussian embeddings; mean over several draws.
  double total = 0;
  const int draws = 20;
  for (int s = 0; s < draws; ++s) {
    Rng rng(100 + s);
    FinalEmbeddings random{EmbeddingTable(nu, 16), EmbeddingTable(ni, 16)};
    for (auto& v : random.users.data()) v = rng.normal();
    for (auto& v : random.items.data()) v = rng.normal();
    const auto rep = evaluate_standard(random, data, data.test, 10);
    total += rep.recall;
    CHECK(rep.random_recall == doctest::Approx(10.0 / ni).epsilon(0.2));
  }
  const double mean = total / draws;
  CHECK(mean == doctest::Approx(10.0 / ni).epsilon(0.35));
}

TEST_CASE("evaluation does not depend on thread count") {
  const auto world = make_planted_world({});
  const auto data = split_dataset(world.interactions, {}, 3);
  Rng rng(9);
  FinalEmbeddings f{EmbeddingTable(data.users.size(), 8), EmbeddingTable(data.items.size(), 8)};
  for (auto& v : f.users.data()) v = rng.normal();
  for (auto& v : f.items.data()) v = rng.normal();
  const auto a = evaluate_standard(f, data, data.test, 20, 1);
  const auto b = evaluate_standard(f, data, data.test, 20, 6);
  CHECK(a.recall == b.recall);
  CHECK(a.ndcg == b.ndcg);
  CHECK(a.precision == b.precision);
  CHECK(a.users == b.users);
}

TEST_CASE("cold-start evaluation scores only cold items") {
  PlantedOptions po;
  po.users = 60;
  po.items = 120;
  po.item_keywords = 10;
  po.aesthetic_keywords = 5;
  po.holdout_fraction = 0.2;
  const auto world = make_planted_world(po);
  const auto data = split_dataset(world.interactions, {}, 3);
  const auto graphs = assemble_graphs(data, {world.item_attributes, world.aesthetic_attributes});
  ModelConfig c;
  c.dim = 4;
  c.layers = 2;
  Recommender model(graphs, EmbeddingTables::random(graphs, 4, 0.1, 1), c);
  const auto cold = planted_cold_items(world);
  const auto rep = evaluate_cold_start(model, cold, world.cold_interactions, 10);
  CHECK(rep.mode == EvalMode::ColdStart);
  CHECK(rep.random_recall == doctest::Approx(10.0 / cold.size()));
  CHECK(rep.users > 0);
  CHECK(rep.recall >= 0.0);
  CHECK(rep.recall <= 1.0);
  CHECK(mode_label(rep.mode) == "cold_start");

  // With no attribute graph every cold item is unscorable and scores zero.
  const auto id_only = assemble_graphs(data, {}, {false, false});
  Recommender bare(id_only, EmbeddingTables::random(id_only, 4, 0.1, 1), c);
  const auto flat = evaluate_cold_start(bare, cold, world.cold_interactions, 10);
  CHECK(flat.users == rep.users);
}
