#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agr/types.hpp"

namespace agr {

/// Bidirectional mapping between external string IDs and dense indices.
///
/// Indices are assigned in order of first insertion, so building the same
/// vocabulary from the same input stream always yields the same numbering.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from an ordered list of IDs; duplicates are an error.
  explicit Vocabulary(std::vector<std::string> entries);

  /// Returns the index of `id`, inserting it at the end when absent.
  Index intern(std::string_view id);

  std::optional<Index> find(std::string_view id) const;

  /// Like find() but throws ErrorKind::Lookup naming `what` when absent.
  Index at(std::string_view id, std::string_view what = "id") const;

  const std::string& id(Index index) const { return entries_.at(index); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const std::string> entries() const noexcept { return entries_; }

  /// Order-sensitive content hash; equal to the hash of the vocabulary file.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> entries_;
  std::map<std::string, Index, std::less<>> index_;
};

// One ID per line, LF-terminated.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

}  // namespace agr
