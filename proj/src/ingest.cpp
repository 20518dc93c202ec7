#include "agr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "agr/error.hpp"
#include "agr/random.hpp"
#include "agr/text.hpp"

namespace agr {

using nlohmann::json;

std::vector<Interaction> parse_interactions(std::istream& in, std::string_view source) {
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw Error(ErrorKind::Parse, std::string(source) + ":" + std::to_string(line_no) +
                                        ": expected user_id<TAB>item_id");
    }
    out.push_back({std::string(cols[0]), std::string(cols[1])});
  }
  if (out.empty()) throw Error(ErrorKind::Parse, std::string(source) + ": no interactions");
  return out;
}

std::vector<Interaction> filter_min_popularity(std::span<const Interaction> interactions,
                                               std::size_t threshold) {
  std::unordered_map<std::string_view, std::unordered_set<std::string_view>> users_per_item;
  for (const auto& x : interactions) users_per_item[x.item_id].insert(x.user_id);

  std::vector<Interaction> out;
  out.reserve(interactions.size());
  for (const auto& x : interactions) {
    if (users_per_item[x.item_id].size() > threshold) out.push_back(x);
  }
  return out;
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& r) {
  const double sum = r.train + r.validation + r.test;
  if (r.train < 0 || r.validation < 0 || r.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::Config, "split ratios must be non-negative and sum to 1");
  }
  const double nd = static_cast<double>(n);
  SplitSizes s;
  s.train = std::min(n, static_cast<std::size_t>(std::floor(nd * r.train + 0.5)));
  s.validation = std::min(n - s.train, static_cast<std::size_t>(std::floor(nd * r.validation + 1e-9)));
  s.test = n - s.train - s.validation;
  return s;
}

bool SplitDataset::is_positive(Index user, Index item) const {
  const auto& row = user_positives.at(user);
  return std::binary_search(row.begin(), row.end(), item);
}

void SplitDataset::index_positives() {
  user_positives.assign(users.size(), {});
  for (const auto& p : train) user_positives[p.user].push_back(p.item);
  for (auto& row : user_positives) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
}

SplitDataset split_dataset(std::span<const Interaction> interactions, const SplitRatios& ratios,
                           std::uint64_t seed) {
  const auto sizes = split_sizes(interactions.size(), ratios);
  if (interactions.size() < 3) {
    throw Error(ErrorKind::Invalid, "split needs at least 3 interactions");
  }

  SplitDataset ds;
  ds.split_seed = seed;
  std::vector<IndexPair> pairs;
  pairs.reserve(interactions.size());
  for (const auto& x : interactions) {
    const Index u = ds.users.intern(x.user_id);
    const Index i = ds.items.intern(x.item_id);
    pairs.push_back({u, i});
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));

  std::vector<std::size_t> train(order.begin(), order.begin() + sizes.train);
  std::vector<std::size_t> validation(order.begin() + sizes.train,
                                      order.begin() + sizes.train + sizes.validation);
  std::vector<std::size_t> test(order.begin() + sizes.train + sizes.validation, order.end());

  std::vector<std::size_t> train_count(ds.users.size(), 0);
  for (auto k : train) ++train_count[pairs[k].user];

  // Pull interactions of train-cold users into train.
  auto pull_cold = [&](std::vector<std::size_t>& split) {
    std::size_t moved = 0;
    std::vector<std::size_t> kept;
    kept.reserve(split.size());
    for (auto k : split) {
      if (train_count[pairs[k].user] == 0) {
        train.push_back(k);
        ++train_count[pairs[k].user];
        ++moved;
      } else {
        kept.push_back(k);
      }
    }
    split = std::move(kept);
    return moved;
  };
  std::size_t validation_deficit = pull_cold(validation);
  std::size_t test_deficit = pull_cold(test);

  // Refill from the tail of train; users keep at least one training interaction.
  for (std::size_t pos = train.size(); pos-- > 0 && (validation_deficit + test_deficit) > 0;) {
    const auto k = train[pos];
    if (train_count[pairs[k].user] < 2) continue;
    --train_count[pairs[k].user];
    if (validation_deficit > 0) {
      validation.push_back(k);
      --validation_deficit;
    } else {
      test.push_back(k);
      --test_deficit;
    }
    train.erase(train.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  auto gather = [&](const std::vector<std::size_t>& split) {
    std::vector<IndexPair> out;
    out.reserve(split.size());
    for (auto k : split) out.push_back(pairs[k]);
    return out;
  };
  ds.train = gather(train);
  ds.validation = gather(validation);
  ds.test = gather(test);
  ds.index_positives();
  return ds;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorKind::Parse, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

ItemMetadata parse_item_json(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorKind::Parse, "item record must be a JSON object");

  ItemMetadata meta;
  auto id = optional_string(obj, "item_id");
  if (!id || id->empty()) throw Error(ErrorKind::Parse, "item_id missing or empty");
  meta.item_id = std::move(*id);
  meta.brand = optional_string(obj, "brand");
  meta.category = optional_string(obj, "category");
  meta.color = optional_string(obj, "color");
  meta.description = optional_string(obj, "description");
  meta.image_ref = optional_string(obj, "image_ref");
  if (auto it = obj.find("price"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw Error(ErrorKind::Parse, "price must be a number");
    const double price = it->get<double>();
    if (!std::isfinite(price) || price < 0) {
      throw Error(ErrorKind::Parse, "price must be finite and non-negative");
    }
    meta.price = price;
  }
  return meta;
}

std::vector<ItemMetadata> parse_items(std::istream& in, std::string_view source) {
  std::vector<ItemMetadata> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse_item_json(line));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string item_to_json(const ItemMetadata& item) {
  json obj = {{"item_id", item.item_id}};
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) obj[key] = *v;
  };
  put("brand", item.brand);
  if (item.price) obj["price"] = *item.price;
  put("category", item.category);
  put("color", item.color);
  put("description", item.description);
  put("image_ref", item.image_ref);
  return obj.dump();
}

std::size_t PriceBuckets::bucket(double price) const {
  return static_cast<std::size_t>(
      std::upper_bound(boundaries.begin(), boundaries.end(), price) - boundaries.begin());
}

PriceBuckets fit_price_buckets(std::span<const double> prices, std::size_t n_p) {
  if (n_p < 1) throw Error(ErrorKind::Config, "price bucket count must be >= 1");
  if (prices.empty()) throw Error(ErrorKind::Invalid, "no prices to bucket");

  std::vector<double> sorted(prices.begin(), prices.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  PriceBuckets b;
  b.n_p = n_p;
  for (std::size_t q = 1; q < n_p; ++q) {
    std::size_t cut = (q * n + n_p - 1) / n_p;  // ceil(q * n / n_p)
    while (cut > 0 && cut < n && sorted[cut] == sorted[cut - 1]) ++cut;
    if (cut == 0 || cut >= n) continue;
    if (!b.boundaries.empty() && b.boundaries.back() >= sorted[cut]) continue;
    b.boundaries.push_back(sorted[cut]);
  }
  return b;
}

std::set<std::string, std::less<>> TokenizerOptions::default_stop_words() {
  return {"a",    "an",   "and",  "are",  "as",   "at",   "be",   "but",  "by",   "for",
          "from", "has",  "have", "in",   "into", "is",   "it",   "its",  "of",   "on",
          "or",   "our",  "so",   "that", "the",  "their", "this", "to",  "was",  "we",
          "were", "will", "with", "you",  "your"};
}

std::vector<std::string> tokenize_description(std::string_view description,
                                              const std::set<std::string, std::less<>>& stop_words) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !stop_words.contains(current)) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : description) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      flush();
    } else if (c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) {
      current.push_back(static_cast<char>(c));
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> tokenize_text_attributes(const ItemMetadata& meta,
                                                  const PriceBuckets* buckets,
                                                  const TokenizerOptions& options) {
  std::vector<std::string> out;
  auto field = [&](const char* ns, const std::optional<std::string>& value) {
    if (!value) return;
    auto v = text::normalize_field(*value);
    if (!v.empty()) out.push_back(std::string(ns) + ":" + v);
  };
  field("brand", meta.brand);
  if (meta.price && buckets) out.push_back("price:" + std::to_string(buckets->bucket(*meta.price)));
  field("category", meta.category);
  field("color", meta.color);
  if (options.include_description && meta.description) {
    for (auto& token : tokenize_description(*meta.description, options.stop_words)) {
      auto keyword = "desc:" + token;
      if (std::find(out.begin(), out.end(), keyword) == out.end()) out.push_back(std::move(keyword));
    }
  }
  return out;
}

}  // namespace agr
