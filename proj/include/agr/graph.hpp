#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agr/types.hpp"
#include "agr/vocabulary.hpp"

namespace agr {

struct Edge {
  Index left = 0;
  Index right = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable bipartite adjacency stored in CSR form for both sides.
///
/// Every neighbor list is strictly increasing, and (l, r) appears in the
/// left list of l exactly when l appears in the right list of r.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  /// Sorts and deduplicates `edges`; throws Invalid on out-of-range endpoints.
  static BipartiteGraph from_edges(std::size_t left_count, std::size_t right_count,
                                   std::vector<Edge> edges);

  std::size_t left_count() const noexcept { return left_offsets_.empty() ? 0 : left_offsets_.size() - 1; }
  std::size_t right_count() const noexcept { return right_offsets_.empty() ? 0 : right_offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return left_indices_.size(); }

  std::span<const Index> left_neighbors(Index left) const;
  std::span<const Index> right_neighbors(Index right) const;

  std::size_t left_degree(Index left) const { return left_neighbors(left).size(); }
  std::size_t right_degree(Index right) const { return right_neighbors(right).size(); }

  /// Edges in left-major, right-minor order.
  std::vector<Edge> edges() const;

  friend bool operator==(const BipartiteGraph&, const BipartiteGraph&) = default;

 private:
  std::vector<std::size_t> left_offsets_;
  std::vector<Index> left_indices_;
  std::vector<std::size_t> right_offsets_;
  std::vector<Index> right_indices_;
};

/// Symmetric normalization 1/sqrt(deg_a * deg_b). Zero degrees are rejected.
double norm_coefficient(std::size_t deg_a, std::size_t deg_b);

struct ItemAttributeGraph {
  BipartiteGraph graph;  // items x attributes
  Vocabulary items;
  Vocabulary attributes;
};

/// Builds the items/item-attributes graph.
///
/// `items` may be pre-seeded so that items without any attribute still get a
/// (zero-degree) vertex; otherwise the vocabulary covers exactly the items in
/// `assignments`.
ItemAttributeGraph build_item_attribute_graph(std::span<const Assignment> assignments,
                                              Vocabulary items = {});

struct UserGraphs {
  BipartiteGraph user_items;       // users x items
  BipartiteGraph user_aesthetics;  // users x aesthetic attributes
  Vocabulary users;
  Vocabulary aesthetics;
};

/// Builds the two relations of the users/aesthetics/items graph.
///
/// A user is linked to aesthetic keyword `a` iff some item it interacted with
/// carries `a`; edges are binary. Aesthetic assignments on items outside
/// `items` are ignored. `users` may be pre-seeded to fix the numbering.
UserGraphs build_user_graph(std::span<const Interaction> interactions,
                            std::span<const Assignment> aesthetic_assignments,
                            const Vocabulary& items, Vocabulary users = {});

struct GraphBundle {
  BipartiteGraph item_attributes;
  BipartiteGraph user_items;
  BipartiteGraph user_aesthetics;
  Vocabulary users;
  Vocabulary items;
  Vocabulary attributes;
  Vocabulary aesthetics;

  /// Throws Invalid when the shared vertex sets disagree in size.
  void validate() const;
};

// Edge dump: one `left_id<TAB>right_id` line per edge, LF-terminated.
void write_edge_dump(std::ostream& out, const BipartiteGraph& graph,
                     const Vocabulary& left, const Vocabulary& right);
std::vector<std::pair<std::string, std::string>> read_edge_dump(std::istream& in);

/// Rebuilds a graph from dumped pairs against fixed vocabularies.
BipartiteGraph graph_from_pairs(std::span<const std::pair<std::string, std::string>> pairs,
                                const Vocabulary& left, const Vocabulary& right);

}  // namespace agr
