#include "agr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "agr/error.hpp"
#include "agr/text.hpp"

namespace agr {
namespace {

// Counting-sort style CSR fill; `edges` must already be sorted and unique.
void fill_csr(std::size_t count, std::span<const Edge> edges, bool by_left,
              std::vector<std::size_t>& offsets, std::vector<Index>& indices) {
  offsets.assign(count + 1, 0);
  for (const auto& e : edges) ++offsets[(by_left ? e.left : e.right) + 1];
  for (std::size_t v = 0; v < count; ++v) offsets[v + 1] += offsets[v];
  indices.assign(edges.size(), 0);
  auto cursor = offsets;
  // Left-major sorted input keeps each right list ascending in left index.
  for (const auto& e : edges) {
    const Index key = by_left ? e.left : e.right;
    indices[cursor[key]++] = by_left ? e.right : e.left;
  }
}

}  // namespace

BipartiteGraph BipartiteGraph::from_edges(std::size_t left_count, std::size_t right_count,
                                          std::vector<Edge> edges) {
  for (const auto& e : edges) {
    if (e.left >= left_count || e.right >= right_count) {
      throw Error(ErrorKind::Invalid, "edge (" + std::to_string(e.left) + ", " +
                                          std::to_string(e.right) + ") out of range");
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  BipartiteGraph g;
  fill_csr(left_count, edges, true, g.left_offsets_, g.left_indices_);
  fill_csr(right_count, edges, false, g.right_offsets_, g.right_indices_);
  return g;
}

std::span<const Index> BipartiteGraph::left_neighbors(Index left) const {
  const auto begin = left_offsets_.at(left);
  const auto end = left_offsets_.at(left + 1);
  return {left_indices_.data() + begin, end - begin};
}

std::span<const Index> BipartiteGraph::right_neighbors(Index right) const {
  const auto begin = right_offsets_.at(right);
  const auto end = right_offsets_.at(right + 1);
  return {right_indices_.data() + begin, end - begin};
}

std::vector<Edge> BipartiteGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Index l = 0; l < left_count(); ++l) {
    for (Index r : left_neighbors(l)) out.push_back({l, r});
  }
  return out;
}

double norm_coefficient(std::size_t deg_a, std::size_t deg_b) {
  if (deg_a == 0 || deg_b == 0) {
    throw Error(ErrorKind::Invalid, "isolated vertex in normalization");
  }
  return 1.0 / std::sqrt(static_cast<double>(deg_a) * static_cast<double>(deg_b));
}

ItemAttributeGraph build_item_attribute_graph(std::span<const Assignment> assignments,
                                              Vocabulary items) {
  if (assignments.empty()) throw Error(ErrorKind::Invalid, "empty graph");

  ItemAttributeGraph out;
  out.items = std::move(items);
  std::vector<Edge> edges;
  edges.reserve(assignments.size());
  for (const auto& a : assignments) {
    const auto keyword = text::trim(a.keyword);
    if (keyword.empty()) {
      throw Error(ErrorKind::Invalid, "blank keyword for item '" + a.item_id + "'");
    }
    const Index item = out.items.intern(a.item_id);
    const Index attr = out.attributes.intern(keyword);
    edges.push_back({item, attr});
  }
  out.graph = BipartiteGraph::from_edges(out.items.size(), out.attributes.size(), std::move(edges));
  return out;
}

UserGraphs build_user_graph(std::span<const Interaction> interactions,
                            std::span<const Assignment> aesthetic_assignments,
                            const Vocabulary& items, Vocabulary users) {
  UserGraphs out;
  out.users = std::move(users);

  std::vector<Edge> user_item_edges;
  user_item_edges.reserve(interactions.size());
  for (const auto& x : interactions) {
    const Index item = items.at(x.item_id, "item");
    const Index user = out.users.intern(x.user_id);
    user_item_edges.push_back({user, item});
  }
  out.user_items =
      BipartiteGraph::from_edges(out.users.size(), items.size(), std::move(user_item_edges));

  // Per-item aesthetic keyword sets, numbered in first-appearance order.
  std::vector<std::vector<Index>> item_aesthetics(items.size());
  for (const auto& a : aesthetic_assignments) {
    const auto item = items.find(a.item_id);
    if (!item) continue;
    const auto keyword = text::trim(a.keyword);
    if (keyword.empty()) {
      throw Error(ErrorKind::Invalid, "blank aesthetic keyword for item '" + a.item_id + "'");
    }
    item_aesthetics[*item].push_back(out.aesthetics.intern(keyword));
  }

  std::vector<Edge> user_aesthetic_edges;
  for (Index u = 0; u < out.users.size(); ++u) {
    for (Index i : out.user_items.left_neighbors(u)) {
      for (Index a : item_aesthetics[i]) user_aesthetic_edges.push_back({u, a});
    }
  }
  out.user_aesthetics = BipartiteGraph::from_edges(out.users.size(), out.aesthetics.size(),
                                                   std::move(user_aesthetic_edges));
  return out;
}

void GraphBundle::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Invalid, std::string("inconsistent graph bundle: ") + what);
  };
  require(user_items.left_count() == users.size(), "user-item users");
  require(user_aesthetics.left_count() == users.size(), "user-aesthetic users");
  require(user_items.right_count() == items.size(), "user-item items");
  require(item_attributes.left_count() == items.size(), "item-attribute items");
  require(item_attributes.right_count() == attributes.size(), "item-attribute attributes");
  require(user_aesthetics.right_count() == aesthetics.size(), "user-aesthetic keywords");
}

void write_edge_dump(std::ostream& out, const BipartiteGraph& graph, const Vocabulary& left,
                     const Vocabulary& right) {
  for (const auto& e : graph.edges()) {
    out << left.id(e.left) << '\t' << right.id(e.right) << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> read_edge_dump(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2) {
      throw Error(ErrorKind::Parse, "edge dump line " + std::to_string(line_no) +
                                        ": expected 2 columns");
    }
    pairs.emplace_back(std::string(cols[0]), std::string(cols[1]));
  }
  return pairs;
}

BipartiteGraph graph_from_pairs(std::span<const std::pair<std::string, std::string>> pairs,
                                const Vocabulary& left, const Vocabulary& right) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [l, r] : pairs) edges.push_back({left.at(l), right.at(r)});
  return BipartiteGraph::from_edges(left.size(), right.size(), std::move(edges));
}

}  // namespace agr
