#include <doctest.h>

#include <cmath>
#include <sstream>

#include "agr/error.hpp"
#include "agr/graph.hpp"
#include "agr/random.hpp"

using namespace agr;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected agr::Error");
  return ErrorKind::Invalid;
}

}  // namespace

TEST_CASE("norm_coefficient examples") {
  CHECK(norm_coefficient(1, 1) == 1.0);
  CHECK(norm_coefficient(2, 1) == doctest::Approx(0.70710678118).epsilon(1e-10));
  CHECK(norm_coefficient(4, 9) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK_THROWS_WITH(norm_coefficient(0, 3), doctest::Contains("isolated vertex in normalization"));
  CHECK_THROWS_WITH(norm_coefficient(3, 0), doctest::Contains("isolated vertex in normalization"));
}

TEST_CASE("vocabulary interning and lookup") {
  Vocabulary v;
  CHECK(v.intern("b") == 0);
  CHECK(v.intern("a") == 1);
  CHECK(v.intern("b") == 0);
  CHECK(v.size() == 2);
  CHECK(v.id(1) == "a");
  CHECK_FALSE(v.find("zzz").has_value());
  CHECK_THROWS_WITH(v.at("zzz", "user"), doctest::Contains("unknown user 'zzz'"));
  CHECK(kind_of([&] { v.at("zzz"); }) == ErrorKind::Lookup);
  CHECK(kind_of([] { Vocabulary({"x", "x"}); }) == ErrorKind::Invalid);

  std::stringstream io;
  write_vocabulary(io, v);
  CHECK(io.str() == "b\na\n");
  CHECK(read_vocabulary(io) == v);
  CHECK(v.fingerprint() != Vocabulary({"a", "b"}).fingerprint());
}

TEST_CASE("bipartite graph stores both sides consistently") {
  auto g = BipartiteGraph::from_edges(3, 2, {{2, 1}, {0, 0}, {0, 1}, {0, 0}});
  CHECK(g.edge_count() == 3);
  CHECK(g.left_degree(0) == 2);
  CHECK(g.left_degree(1) == 0);
  CHECK(g.right_degree(1) == 2);
  const auto r1 = g.right_neighbors(1);
  CHECK(std::vector<Index>(r1.begin(), r1.end()) == std::vector<Index>{0, 2});
  CHECK(g.edges() == std::vector<Edge>{{0, 0}, {0, 1}, {2, 1}});
  CHECK(kind_of([] { BipartiteGraph::from_edges(1, 1, {{1, 0}}); }) == ErrorKind::Invalid);
}

TEST_CASE("CSR symmetry holds on random graphs") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = 1 + rng.uniform_index(15), r = 1 + rng.uniform_index(15);
    std::vector<Edge> edges;
    for (int e = 0; e < 40; ++e)
      edges.push_back({static_cast<Index>(rng.uniform_index(l)), static_cast<Index>(rng.uniform_index(r))});
    const auto g = BipartiteGraph::from_edges(l, r, edges);
    std::size_t total = 0;
    for (Index a = 0; a < l; ++a) {
      const auto ns = g.left_neighbors(a);
      CHECK(std::is_sorted(ns.begin(), ns.end()));
      CHECK(std::adjacent_find(ns.begin(), ns.end()) == ns.end());
      for (Index b : ns) {
        const auto back = g.right_neighbors(b);
        CHECK(std::binary_search(back.begin(), back.end(), a));
      }
      total += ns.size();
    }
    CHECK(total == g.edge_count());
  }
}

TEST_CASE("item attribute graph construction") {
  const std::vector<Assignment> a = {{"i1", "red"}, {"i2", "red"}, {"i1", "silk"}, {"i1", "red"}};
  const auto iag = build_item_attribute_graph(a);
  CHECK(iag.items.size() == 2);
  CHECK(iag.attributes.size() == 2);
  CHECK(iag.graph.edge_count() == 3);
  CHECK(iag.graph.right_degree(iag.attributes.at("red")) == 2);

  CHECK_THROWS_WITH(build_item_attribute_graph(std::vector<Assignment>{}), doctest::Contains("empty graph"));
  CHECK_THROWS_WITH(build_item_attribute_graph(std::vector<Assignment>{{"i9", " "}}),
                    doctest::Contains("blank keyword for item 'i9'"));

  // Pre-seeded items keep zero-degree vertices.
  const auto seeded = build_item_attribute_graph(a, Vocabulary({"i0", "i1", "i2"}));
  CHECK(seeded.items.size() == 3);
  CHECK(seeded.graph.left_degree(0) == 0);
}

TEST_CASE("user graphs link users to aesthetics of interacted items") {
  const Vocabulary items({"i1", "i2", "i3"});
  const std::vector<Interaction> inter = {{"u1", "i1"}, {"u1", "i2"}, {"u2", "i3"}, {"u1", "i1"}};
  const std::vector<Assignment> aes = {{"i1", "soft"}, {"i2", "soft"}, {"i3", "bright"}, {"zz", "ghost"}};
  const auto ug = build_user_graph(inter, aes, items);
  CHECK(ug.users.size() == 2);
  CHECK(ug.user_items.edge_count() == 3);
  CHECK_FALSE(ug.aesthetics.find("ghost").has_value());
  // u1 reaches "soft" through two items but holds a single binary edge.
  CHECK(ug.user_aesthetics.left_degree(ug.users.at("u1")) == 1);
  CHECK(ug.user_aesthetics.right_degree(ug.aesthetics.at("bright")) == 1);

  const std::vector<Interaction> bad = {{"u1", "nope"}};
  CHECK(kind_of([&] { build_user_graph(bad, aes, items); }) == ErrorKind::Lookup);
}

TEST_CASE("edge dump round trip") {
  const Vocabulary left({"i1", "i2"}), right({"red", "blue"});
  const auto g = BipartiteGraph::from_edges(2, 2, {{0, 1}, {1, 0}, {0, 0}});
  std::stringstream io;
  write_edge_dump(io, g, left, right);
  CHECK(io.str() == "i1\tred\ni1\tblue\ni2\tred\n");
  const auto pairs = read_edge_dump(io);
  CHECK(graph_from_pairs(pairs, left, right) == g);

  std::istringstream broken("i1\tred\textra\n");
  CHECK(kind_of([&] { read_edge_dump(broken); }) == ErrorKind::Parse);
}
