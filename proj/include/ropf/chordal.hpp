// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ropf/network.hpp"

namespace ropf {

/// Undirected simple graph on vertices 0..n-1 with sorted adjacency lists.
class SparsityGraph {
 public:
  explicit SparsityGraph(int n = 0) : adj_(n) {}

  /// Lifted-matrix pattern of a network: vertex 2i is Re(v_i), 2i+1 is
  /// Im(v_i); each bus pair and each branch's four coordinates are cliques.
  static SparsityGraph from_network(const Network& net);

  int num_vertices() const { return static_cast<int>(adj_.size()); }
  long num_edges() const;
  void add_edge(int a, int b);
  bool has_edge(int a, int b) const;
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }

 private:
  std::vector<std::vector<int>> adj_;
};

/// Fill-reducing elimination order (minimum degree, ties to the lowest
/// vertex id). Returns order[k] = k-th eliminated vertex.
std::vector<int> amd_ordering(const SparsityGraph& g);

struct ChordalExtension {
  SparsityGraph filled;
  std::vector<std::vector<int>> cliques;  // maximal cliques, vertices ascending
  std::vector<int> etree_parent;          // elimination tree, -1 at roots
};

ChordalExtension chordal_extension(const SparsityGraph& g, const std::vector<int>& order);

struct CliqueLink {
  int parent = 0;
  int child = 0;
  std::vector<int> shared;  // ascending
};

struct CliqueDecomposition {
  int num_vertices = 0;
  std::vector<std::vector<int>> cliques;
  std::vector<int> parent;  // clique tree (forest), -1 at roots
  std::vector<CliqueLink> links;

  /// Number of lifted-matrix entries tied by linking equalities,
  /// Σ s(s+1)/2 over links with s shared vertices.
  long linking_entries() const;
  int max_clique_size() const;
};

/// Maximum-weight spanning forest of the clique intersection graph. Throws
/// when the result lacks the running-intersection property.
CliqueDecomposition clique_tree(const std::vector<std::vector<int>>& cliques, int num_vertices);

/// Ordering, chordal extension and clique tree in one call.
CliqueDecomposition decompose(const SparsityGraph& g);

struct MergeParams {
  /// Weight of one linking entry against the cubic block-size cost. A merge
  /// of parent p and child c is accepted iff
  ///   |p ∪ c|³ <= |p|³ + |c|³ + link_weight · (entries linking p and c).
  double link_weight = 24.0;
};

/// Greedy parent-child merging over the clique tree, `k_max` passes.
CliqueDecomposition merge_cliques(const CliqueDecomposition& deco, int k_max, MergeParams params = {});

// Structural checks used by tests and by debug assertions.
bool is_chordal(const SparsityGraph& g);
bool has_running_intersection(const CliqueDecomposition& deco);
/// Every edge of `g` lies inside at least one clique.
bool covers(const CliqueDecomposition& deco, const SparsityGraph& g);

/// One JSON object per line: {"clique": id, "parent": p, "vertices": [...]}.
std::string cliques_jsonl(const CliqueDecomposition& deco);

}  // namespace ropf
