#include "agr/planted.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "agr/error.hpp"
#include "agr/random.hpp"

namespace agr {

PlantedWorld make_planted_world(const PlantedOptions& o) {
  if (o.users == 0 || o.items == 0 || o.item_keywords == 0 || o.aesthetic_keywords == 0 ||
      o.keywords_per_user == 0 || o.keywords_per_user > o.item_keywords) {
    throw Error(ErrorKind::Config, "invalid planted world dimensions");
  }
  if (o.holdout_fraction < 0 || o.holdout_fraction >= 1) {
    throw Error(ErrorKind::Config, "holdout fraction must be in [0, 1)");
  }
  Rng rng(o.seed);
  PlantedWorld w;

  auto item_id = [](std::size_t i) { return "item" + std::to_string(i); };
  auto user_id = [](std::size_t u) { return "user" + std::to_string(u); };
  auto keyword = [](std::size_t k) { return "kw" + std::to_string(k); };
  auto aesthetic = [](std::size_t k) { return "aes" + std::to_string(k); };

  // Balanced keyword assignment, shuffled over items.
  std::vector<std::size_t> item_keyword(o.items);
  for (std::size_t i = 0; i < o.items; ++i) item_keyword[i] = i % o.item_keywords;
  rng.shuffle(std::span(item_keyword));

  for (std::size_t i = 0; i < o.items; ++i) {
    w.item_attributes.push_back({item_id(i), keyword(item_keyword[i])});
    const auto tied = item_keyword[i] % o.aesthetic_keywords;
    w.aesthetic_attributes.push_back({item_id(i), aesthetic(tied)});
    const auto noise = static_cast<std::size_t>(rng.uniform_index(o.aesthetic_keywords));
    if (noise != tied) w.aesthetic_attributes.push_back({item_id(i), aesthetic(noise)});
  }

  std::vector<std::size_t> order(o.items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  const auto n_cold = static_cast<std::size_t>(o.holdout_fraction * static_cast<double>(o.items));
  std::set<std::size_t> cold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_cold));
  for (auto i : cold) w.cold_items.push_back(item_id(i));

  std::vector<std::size_t> keywords(o.item_keywords);
  std::iota(keywords.begin(), keywords.end(), std::size_t{0});
  for (std::size_t u = 0; u < o.users; ++u) {
    rng.shuffle(std::span(keywords));
    std::set<std::size_t> liked(keywords.begin(), keywords.begin() + static_cast<std::ptrdiff_t>(o.keywords_per_user));
    std::vector<std::string> names;
    for (auto k : liked) names.push_back(keyword(k));
    w.user_keywords.push_back(std::move(names));

    bool any = false;
    for (std::size_t i = 0; i < o.items; ++i) {
      if (!liked.contains(item_keyword[i])) continue;
      if (rng.uniform01() >= o.interaction_probability) continue;
      auto& target = cold.contains(i) ? w.cold_interactions : w.interactions;
      target.push_back({user_id(u), item_id(i)});
      any = any || !cold.contains(i);
    }
    if (!any) {
      // Every user keeps at least one warm interaction.
      for (std::size_t i = 0; i < o.items; ++i) {
        if (liked.contains(item_keyword[i]) && !cold.contains(i)) {
          w.interactions.push_back({user_id(u), item_id(i)});
          break;
        }
      }
    }
  }
  return w;
}

std::vector<ColdItem> planted_cold_items(const PlantedWorld& world) {
  std::map<std::string, std::vector<std::string>> keywords;
  for (const auto& a : world.item_attributes) keywords[a.item_id].push_back(a.keyword);
  std::vector<ColdItem> out;
  for (const auto& id : world.cold_items) out.push_back({id, keywords[id]});
  return out;
}

}  // namespace agr
