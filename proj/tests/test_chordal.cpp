// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "ropf/chordal.hpp"
#include "ropf/error.hpp"
#include "ropf/matpower.hpp"

using namespace ropf;

namespace {

SparsityGraph graph(int n, std::initializer_list<std::pair<int, int>> edges) {
  SparsityGraph g(n);
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

SparsityGraph case_graph(const char* name) {
  return SparsityGraph::from_network(load_network(oracle::data_path(name), CostPolicy::DropQuadratic));
}

SparsityGraph graph_of(const std::vector<std::vector<int>>& cliques, int n) {
  SparsityGraph g(n);
  for (const auto& c : cliques) {
    for (size_t i = 0; i < c.size(); ++i) {
      for (size_t j = i + 1; j < c.size(); ++j) g.add_edge(c[i], c[j]);
    }
  }
  return g;
}

long shared_total(const CliqueDecomposition& d) {
  long s = 0;
  for (const CliqueLink& l : d.links) s += static_cast<long>(l.shared.size());
  return s;
}

}  // namespace

TEST_CASE("path graph: endpoints are eliminated before the centre") {
  const auto order = amd_ordering(graph(3, {{0, 1}, {1, 2}}));
  REQUIRE(order.size() == 3);
  // The last two tie once an endpoint is gone.
  CHECK(order[0] != 1);
}

TEST_CASE("complete graph: no fill whatever the order") {
  const SparsityGraph k4 = graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  const auto order = amd_ordering(k4);
  const ChordalExtension ext = chordal_extension(k4, order);
  CHECK(ext.filled.num_edges() == 6);
  CHECK(ext.cliques.size() == 1);
}

TEST_CASE("star graph: the centre goes among the last two and the order has zero fill") {
  const SparsityGraph s5 = graph(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
  const auto order = amd_ordering(s5);
  CHECK(std::find(order.begin(), order.end(), 0) - order.begin() >= 4);
  CHECK(oracle::fill_in(oracle::adjacency(s5), order) == 0);
  // Brute force: zero fill is the minimum, and it requires the centre to be
  // among the last two eliminated.
  std::vector<int> perm{0, 1, 2, 3, 4, 5};
  int best = 1 << 30;
  do {
    const int f = oracle::fill_in(oracle::adjacency(s5), perm);
    best = std::min(best, f);
    if (f == 0) CHECK(std::find(perm.begin(), perm.end(), 0) - perm.begin() >= 4);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(best == 0);
}

TEST_CASE("4-cycle in natural order: one chord, two triangles") {
  const SparsityGraph c4 = graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const ChordalExtension ext = chordal_extension(c4, {0, 1, 2, 3});
  CHECK(ext.filled.num_edges() == 5);
  CHECK(ext.filled.has_edge(1, 3));
  REQUIRE(ext.cliques.size() == 2);
  for (const auto& c : ext.cliques) CHECK(c.size() == 3);
  CHECK(is_chordal(ext.filled));
  CHECK_FALSE(is_chordal(c4));
}

TEST_CASE("trees need no fill and their cliques are the edges") {
  const SparsityGraph t = graph(7, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}});
  const ChordalExtension ext = chordal_extension(t, amd_ordering(t));
  CHECK(ext.filled.num_edges() == t.num_edges());
  CHECK(ext.cliques.size() == 6);
  for (const auto& c : ext.cliques) CHECK(c.size() == 2);
}

TEST_CASE("orderings must be permutations") {
  const SparsityGraph g = graph(3, {{0, 1}});
  CHECK_THROWS_AS(chordal_extension(g, {0, 1}), Error);
  CHECK_THROWS_AS(chordal_extension(g, {0, 1, 1}), Error);
}

TEST_CASE("lifted case cliques agree with Bron-Kerbosch on the filled graph") {
  for (const char* name : {"case14.m", "case30.m", "case57.m"}) {
    CAPTURE(name);
    const SparsityGraph g = case_graph(name);
    const ChordalExtension ext = chordal_extension(g, amd_ordering(g));
    CHECK(oracle::chordal(oracle::adjacency(ext.filled)));
    auto expected = oracle::maximal_cliques(oracle::adjacency(ext.filled));
    auto got = ext.cliques;
    std::sort(got.begin(), got.end());
    CHECK(got == expected);
    size_t max_size = 0;
    for (const auto& c : expected) max_size = std::max(max_size, c.size());
    CHECK(decompose(g).max_clique_size() == static_cast<int>(max_size));
  }
}

TEST_CASE("clique tree: small cases") {
  const CliqueDecomposition d = clique_tree({{0, 1, 2}, {1, 2, 3}}, 4);
  REQUIRE(d.links.size() == 1);
  CHECK(d.links[0].shared == std::vector<int>{1, 2});
  CHECK(d.linking_entries() == 3);
  const CliqueDecomposition f = clique_tree({{0, 1}, {2, 3}}, 4);
  CHECK(f.links.empty());
  CHECK(std::count(f.parent.begin(), f.parent.end(), -1) == 2);
  CHECK_THROWS_AS(clique_tree({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4), Error);
}

TEST_CASE("case30 clique tree is a maximum-weight spanning forest") {
  const CliqueDecomposition d = decompose(case_graph("case30.m"));
  CHECK(shared_total(d) == oracle::max_spanning_forest_weight(d.cliques));
  CHECK(has_running_intersection(d));
}

TEST_CASE("merging: zero passes is the identity") {
  const CliqueDecomposition d = decompose(case_graph("case14.m"));
  const CliqueDecomposition m = merge_cliques(d, 0);
  CHECK(m.cliques == d.cliques);
  CHECK(m.parent == d.parent);
  CHECK_THROWS_AS(merge_cliques(d, -1), Error);
}

TEST_CASE("merging: full overlap collapses into one clique") {
  const CliqueDecomposition d = clique_tree({{1, 2, 3}, {2, 3, 4}}, 5);
  const CliqueDecomposition m = merge_cliques(d, 1);
  REQUIRE(m.cliques.size() == 1);
  CHECK(m.cliques[0] == std::vector<int>{1, 2, 3, 4});
  CHECK(m.links.empty());
}

TEST_CASE("merging case118: fewer linking entries, invariants kept") {
  const SparsityGraph g = case_graph("case118.m");
  const CliqueDecomposition d = decompose(g);
  const CliqueDecomposition m = merge_cliques(d, 1);
  CHECK(m.linking_entries() < d.linking_entries());
  CHECK(m.cliques.size() <= d.cliques.size());
  for (const CliqueDecomposition* x : {&d, &m}) {
    CHECK(has_running_intersection(*x));
    CHECK(covers(*x, g));
    CHECK(oracle::chordal(oracle::adjacency_of_cliques(x->cliques, x->num_vertices)));
    CHECK(is_chordal(graph_of(x->cliques, x->num_vertices)));
  }
  // More passes never undo earlier merges.
  CHECK(merge_cliques(d, 2).cliques.size() <= m.cliques.size());
}

TEST_CASE("JSON lines dump") {
  const CliqueDecomposition d = clique_tree({{0, 1, 2}, {1, 2, 3}}, 4);
  const std::string s = cliques_jsonl(d);
  CHECK(std::count(s.begin(), s.end(), '\n') == 2);
  CHECK(s.find("\"vertices\"") != std::string::npos);
}
