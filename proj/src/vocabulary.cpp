#include "agr/vocabulary.hpp"

#include <istream>
#include <ostream>

#include "agr/error.hpp"
#include "agr/hash.hpp"

namespace agr {

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> entries) {
  entries_.reserve(entries.size());
  for (auto& id : entries) {
    if (index_.contains(id)) {
      throw Error(ErrorKind::Invalid, "duplicate vocabulary entry '" + id + "'");
    }
    intern(id);
  }
}

Index Vocabulary::intern(std::string_view id) {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  const auto next = static_cast<Index>(entries_.size());
  entries_.emplace_back(id);
  index_.emplace(entries_.back(), next);
  return next;
}

std::optional<Index> Vocabulary::find(std::string_view id) const {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  return std::nullopt;
}

Index Vocabulary::at(std::string_view id, std::string_view what) const {
  if (auto found = find(id)) return *found;
  throw Error(ErrorKind::Lookup, "unknown " + std::string(what) + " '" + std::string(id) + "'");
}

std::uint64_t Vocabulary::fingerprint() const noexcept {
  std::uint64_t h = kFnvOffset;
  for (const auto& id : entries_) {
    h = fnv1a64(id, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& id : vocab.entries()) out << id << '\n';
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(line);
  }
  return Vocabulary(std::move(entries));
}

}  // namespace agr
