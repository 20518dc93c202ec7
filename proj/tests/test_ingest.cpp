#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "agr/error.hpp"
#include "agr/ingest.hpp"
#include "agr/random.hpp"

using namespace agr;

namespace {

std::vector<Interaction> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_interactions(in, "mem");
}

std::multiset<std::pair<Index, Index>> as_multiset(const std::vector<IndexPair>& v) {
  std::multiset<std::pair<Index, Index>> out;
  for (const auto& p : v) out.insert({p.user, p.item});
  return out;
}

std::vector<Interaction> synthetic(std::size_t users, std::size_t items, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Interaction> out;
  for (std::size_t k = 0; k < n; ++k)
    out.push_back({"u" + std::to_string(rng.uniform_index(users)), "i" + std::to_string(rng.uniform_index(items))});
  return out;
}

}  // namespace

TEST_CASE("parse_interactions") {
  CHECK(parse("u1\ti9\n") == std::vector<Interaction>{{"u1", "i9"}});
  CHECK(parse("u1\ti9\nu1\ti9\n").size() == 2);
  CHECK(parse("u1\ti9\n\nu2\ti3").size() == 2);
  CHECK(parse("u1\ti9\r\n") == std::vector<Interaction>{{"u1", "i9"}});
  CHECK_THROWS_WITH(parse("u1\n"), doctest::Contains("mem:1"));
  CHECK_THROWS_WITH(parse("u1\ti9\nu2\ti3\tx\n"), doctest::Contains("mem:2"));
  CHECK_THROWS_AS(parse(""), Error);
}

TEST_CASE("filter_min_popularity counts distinct users, strictly more than") {
  std::vector<Interaction> in;
  for (int u = 0; u < 10; ++u) in.push_back({"u" + std::to_string(u), "ten"});
  for (int u = 0; u < 11; ++u) in.push_back({"u" + std::to_string(u), "eleven"});
  // Repeated rows from one user do not add popularity.
  for (int r = 0; r < 20; ++r) in.push_back({"u0", "spam"});

  const auto out = filter_min_popularity(in, 10);
  CHECK(out.size() == 11);
  CHECK(std::all_of(out.begin(), out.end(), [](const Interaction& x) { return x.item_id == "eleven"; }));
  CHECK(filter_min_popularity(in, 0) == in);
  CHECK(filter_min_popularity(in, 100).empty());
}

TEST_CASE("split arithmetic reproduces the published counts") {
  const auto s = split_sizes(459146, {});
  CHECK(s.train == 367317);
  CHECK(s.validation == 45914);
  CHECK(s.test == 45915);

  const auto ten = split_sizes(10, {});
  CHECK(ten.train == 8);
  CHECK(ten.validation == 1);
  CHECK(ten.test == 1);

  CHECK_THROWS_AS(split_sizes(10, {0.8, 0.1, 0.2}), Error);
  for (std::size_t n : {3u, 7u, 99u, 1000u, 12345u}) {
    const auto z = split_sizes(n, {});
    CHECK(z.train + z.validation + z.test == n);
  }
}

TEST_CASE("split_dataset is a deterministic partition without cold users") {
  const auto inter = synthetic(40, 60, 500, 11);
  const auto a = split_dataset(inter, {}, 3);
  const auto b = split_dataset(inter, {}, 3);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  // Union equals the input multiset.
  std::vector<IndexPair> all;
  for (const auto& x : inter) all.push_back({a.users.at(x.user_id), a.items.at(x.item_id)});
  auto joined = a.train;
  joined.insert(joined.end(), a.validation.begin(), a.validation.end());
  joined.insert(joined.end(), a.test.begin(), a.test.end());
  CHECK(as_multiset(joined) == as_multiset(all));

  const auto sizes = split_sizes(inter.size(), {});
  CHECK(a.train.size() == sizes.train);
  CHECK(a.validation.size() == sizes.validation);
  CHECK(a.test.size() == sizes.test);

  std::set<Index> train_users;
  for (const auto& p : a.train) train_users.insert(p.user);
  for (const auto* part : {&a.validation, &a.test})
    for (const auto& p : *part) CHECK(train_users.count(p.user) == 1);

  for (const auto& p : a.train) CHECK(a.is_positive(p.user, p.item));

  const auto c = split_dataset(inter, {}, 4);
  CHECK(as_multiset(c.test) != as_multiset(a.test));

  CHECK_THROWS_AS(split_dataset(std::vector<Interaction>{{"u", "i"}, {"u", "j"}}, {}, 1), Error);
}

TEST_CASE("split of ten interactions is 8/1/1") {
  std::vector<Interaction> inter;
  for (int k = 0; k < 10; ++k) inter.push_back({"u" + std::to_string(k % 2), "i" + std::to_string(k)});
  const auto s = split_dataset(inter, {}, 9);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);
}

TEST_CASE("item metadata parsing") {
  const auto m = parse_item_json(R"({"item_id":"x1","brand":"Acme","price":12.5,"image_ref":"img/x1.jpg"})");
  CHECK(m.item_id == "x1");
  CHECK(m.brand == "Acme");
  CHECK(m.price == 12.5);
  CHECK_FALSE(m.color.has_value());
  CHECK(parse_item_json(item_to_json(m)).price == 12.5);

  CHECK_THROWS_AS(parse_item_json(R"({"brand":"x"})"), Error);
  CHECK_THROWS_AS(parse_item_json(R"({"item_id":"a","price":-1})"), Error);
  CHECK_THROWS_AS(parse_item_json("not json"), Error);

  std::istringstream in("{\"item_id\":\"a\"}\n\n{\"item_id\":\"\"}\n");
  CHECK_THROWS_WITH(parse_items(in, "items"), doctest::Contains("items:3"));
}

TEST_CASE("fit_price_buckets") {
  const std::vector<double> four = {10, 20, 30, 40};
  const auto b = fit_price_buckets(four, 2);
  CHECK(b.bucket(10) == 0);
  CHECK(b.bucket(20) == 0);
  CHECK(b.bucket(30) == 1);
  CHECK(b.bucket(40) == 1);

  const auto one = fit_price_buckets(four, 1);
  for (double p : four) CHECK(one.bucket(p) == 0);

  const std::vector<double> tied = {5, 5, 5, 9};
  const auto t = fit_price_buckets(tied, 2);
  CHECK(t.bucket(5) == t.bucket(5.0));
  CHECK(t.bucket(9) == 1);
  CHECK(t.bucket(5) == 0);

  CHECK_THROWS_AS(fit_price_buckets(four, 0), Error);
  try {
    fit_price_buckets(four, 0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("price buckets are monotone with labels in range") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> prices;
    const auto n = 1 + rng.uniform_index(80);
    for (std::size_t k = 0; k < n; ++k) prices.push_back(static_cast<double>(rng.uniform_index(30)));
    const auto n_p = 1 + rng.uniform_index(12);
    const auto b = fit_price_buckets(prices, n_p);
    CHECK(std::is_sorted(b.boundaries.begin(), b.boundaries.end()));
    CHECK(std::adjacent_find(b.boundaries.begin(), b.boundaries.end()) == b.boundaries.end());
    std::sort(prices.begin(), prices.end());
    for (std::size_t k = 0; k < prices.size(); ++k) {
      CHECK(b.bucket(prices[k]) < n_p);
      if (k > 0) CHECK(b.bucket(prices[k - 1]) <= b.bucket(prices[k]));
    }
  }
}

TEST_CASE("tokenize_text_attributes") {
  const std::vector<double> prices = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto buckets = fit_price_buckets(prices, 5);

  ItemMetadata m;
  m.item_id = "x";
  m.brand = "Acme";
  m.price = 5.5;
  m.category = "skirt";
  m.color = "navy";
  CHECK(buckets.bucket(5.5) == 2);
  CHECK(tokenize_text_attributes(m, &buckets) ==
        std::vector<std::string>{"brand:acme", "price:2", "category:skirt", "color:navy"});

  ItemMetadata empty;
  empty.item_id = "y";
  CHECK(tokenize_text_attributes(empty, &buckets).empty());

  ItemMetadata described;
  described.item_id = "z";
  described.description = "A light summer skirt.";
  TokenizerOptions opts;
  opts.stop_words = {"a"};
  const auto toks = tokenize_text_attributes(described, nullptr, opts);
  for (const char* want : {"desc:light", "desc:summer", "desc:skirt"})
    CHECK(std::find(toks.begin(), toks.end(), want) != toks.end());
  CHECK(std::find(toks.begin(), toks.end(), "desc:a") == toks.end());

  opts.include_description = false;
  CHECK(tokenize_text_attributes(described, nullptr, opts).empty());

  ItemMetadata spaced;
  spaced.item_id = "w";
  spaced.brand = "  Big   Brand ";
  CHECK(tokenize_text_attributes(spaced, nullptr) == std::vector<std::string>{"brand:big brand"});
}

TEST_CASE("description tokens are lowercase, alphanumeric, length >= 2") {
  const auto toks = tokenize_description("Soft, WARM knit -- x 100% wool; the best!", {"the"});
  CHECK(toks == std::vector<std::string>{"soft", "warm", "knit", "100", "wool", "best"});
  for (const auto& t : tokenize_description("Über-soft: ÀLA mode, it's 2-in-1", TokenizerOptions::default_stop_words())) {
    CHECK(t.size() >= 2);
    CHECK(std::none_of(t.begin(), t.end(), [](char c) { return c >= 'A' && c <= 'Z'; }));
  }
}
