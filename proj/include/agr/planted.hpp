#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "agr/eval.hpp"
#include "agr/ingest.hpp"
#include "agr/types.hpp"

namespace agr {

/// Synthetic world with known tastes. Every item carries one item keyword and
/// two aesthetic keywords (one tied to its item keyword, one random). Every
/// user has `keywords_per_user` planted item keywords and interacts with each
/// item sharing one of them with probability `interaction_probability`.
struct PlantedOptions {
  std::size_t users = 200;
  std::size_t items = 500;
  std::size_t item_keywords = 30;
  std::size_t aesthetic_keywords = 15;
  std::size_t keywords_per_user = 3;
  double interaction_probability = 0.5;
  double holdout_fraction = 0.0;  // items removed from training entirely
  std::uint64_t seed = 2024;
};

struct PlantedWorld {
  std::vector<Interaction> interactions;       // warm items only
  std::vector<Interaction> cold_interactions;  // interactions on held-out items
  std::vector<Assignment> item_attributes;     // all items
  std::vector<Assignment> aesthetic_attributes;
  std::vector<std::string> cold_items;
  std::vector<std::vector<std::string>> user_keywords;
};

PlantedWorld make_planted_world(const PlantedOptions& options);

/// Keywords per cold item, in `world.cold_items` order.
std::vector<ColdItem> planted_cold_items(const PlantedWorld& world);

}  // namespace agr
