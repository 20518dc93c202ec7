#pragma once

#include <cstdint>
#include <string>

namespace agr {

using Index = std::uint32_t;

// A raw user-item interaction keyed by external string IDs.
struct Interaction {
  std::string user_id;
  std::string item_id;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// An (item, keyword) pair feeding one of the attribute graphs.
struct Assignment {
  std::string item_id;
  std::string keyword;

  friend bool operator==(const Assignment&, const Assignment&) = default;
  friend auto operator<=>(const Assignment&, const Assignment&) = default;
};

// A user-item interaction in dense index space.
struct IndexPair {
  Index user = 0;
  Index item = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

}  // namespace agr
