// Copyright 2026 The ropf Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropf/chordal.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ropf/error.hpp"
#include "ropf/quadratic.hpp"

namespace ropf {

SparsityGraph SparsityGraph::from_network(const Network& net) {
  SparsityGraph g(2 * net.num_buses());
  for (int i = 0; i < net.num_buses(); ++i) g.add_edge(re_coord(i), im_coord(i));
  for (const Branch& br : net.branches) {
    const int c[4] = {re_coord(br.from), im_coord(br.from), re_coord(br.to), im_coord(br.to)};
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) g.add_edge(c[a], c[b]);
    }
  }
  return g;
}

long SparsityGraph::num_edges() const {
  long e = 0;
  for (const auto& a : adj_) e += static_cast<long>(a.size());
  return e / 2;
}

void SparsityGraph::add_edge(int a, int b) {
  if (a == b) return;
  auto insert = [](std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  };
  insert(adj_.at(a), b);
  insert(adj_.at(b), a);
}

bool SparsityGraph::has_edge(int a, int b) const {
  const auto& v = adj_.at(a);
  return std::binary_search(v.begin(), v.end(), b);
}

namespace {

class BitMatrix {
 public:
  explicit BitMatrix(int n) : n_(n), words_((n + 63) / 64), bits_(static_cast<size_t>(n) * words_, 0) {}
  void set(int r, int c) { row(r)[c / 64] |= std::uint64_t{1} << (c % 64); }
  void reset(int r, int c) { row(r)[c / 64] &= ~(std::uint64_t{1} << (c % 64)); }
  bool test(int r, int c) const { return (row(r)[c / 64] >> (c % 64)) & 1u; }
  int count(int r) const {
    int k = 0;
    for (int w = 0; w < words_; ++w) k += std::popcount(row(r)[w]);
    return k;
  }
  std::vector<int> members(int r) const {
    std::vector<int> out;
    for (int w = 0; w < words_; ++w) {
      std::uint64_t x = row(r)[w];
      while (x) {
        out.push_back(w * 64 + std::countr_zero(x));
        x &= x - 1;
      }
    }
    return out;
  }

 private:
  std::uint64_t* row(int r) { return bits_.data() + static_cast<size_t>(r) * words_; }
  const std::uint64_t* row(int r) const { return bits_.data() + static_cast<size_t>(r) * words_; }
  int n_;
  int words_;
  std::vector<std::uint64_t> bits_;
};

}  // namespace

std::vector<int> amd_ordering(const SparsityGraph& g) {
  const int n = g.num_vertices();
  BitMatrix adj(n);
  std::vector<int> degree(n);
  for (int v = 0; v < n; ++v) {
    for (int w : g.neighbors(v)) adj.set(v, w);
    degree[v] = static_cast<int>(g.neighbors(v).size());
  }
  std::vector<char> alive(n, 1);
  std::vector<int> order;
  order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (alive[v] && (best < 0 || degree[v] < degree[best])) best = v;
    }
    order.push_back(best);
    alive[best] = 0;
    const std::vector<int> nbrs = adj.members(best);
    for (int a : nbrs) {
      adj.reset(a, best);
      for (int b : nbrs) {
        if (a != b) adj.set(a, b);
      }
    }
    for (int a : nbrs) degree[a] = adj.count(a);
  }
  return order;
}

ChordalExtension chordal_extension(const SparsityGraph& g, const std::vector<int>& order) {
  const int n = g.num_vertices();
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "ordering is not a permutation of the vertices");
  }
  std::vector<int> pos(n, -1);
  for (int k = 0; k < n; ++k) {
    if (order[k] < 0 || order[k] >= n || pos[order[k]] >= 0) {
      throw Error(ErrorCode::InvalidArgument, "ordering is not a permutation of the vertices");
    }
    pos[order[k]] = k;
  }
  // Work in position space: vertex k is order[k].
  std::vector<std::set<int>> higher(n);
  for (int v = 0; v < n; ++v) {
    for (int w : g.neighbors(v)) {
      if (pos[w] > pos[v]) higher[pos[v]].insert(pos[w]);
    }
  }
  std::vector<int> parent(n, -1);
  for (int k = 0; k < n; ++k) {
    if (higher[k].empty()) continue;
    const int p = *higher[k].begin();
    parent[k] = p;
    for (auto it = std::next(higher[k].begin()); it != higher[k].end(); ++it) higher[p].insert(*it);
  }

  ChordalExtension out;
  out.filled = SparsityGraph(n);
  out.etree_parent.assign(n, -1);
  std::vector<char> maximal(n, 1);
  for (int k = 0; k < n; ++k) {
    for (int w : higher[k]) out.filled.add_edge(order[k], order[w]);
    if (parent[k] >= 0) {
      out.etree_parent[order[k]] = order[parent[k]];
      if (higher[k].size() == higher[parent[k]].size() + 1) maximal[parent[k]] = 0;
    }
  }
  for (int k = 0; k < n; ++k) {
    if (!maximal[k]) continue;
    std::vector<int> c{order[k]};
    for (int w : higher[k]) c.push_back(order[w]);
    std::sort(c.begin(), c.end());
    out.cliques.push_back(std::move(c));
  }
  std::sort(out.cliques.begin(), out.cliques.end());
  return out;
}

long CliqueDecomposition::linking_entries() const {
  long e = 0;
  for (const CliqueLink& l : links) {
    const long s = static_cast<long>(l.shared.size());
    e += s * (s + 1) / 2;
  }
  return e;
}

int CliqueDecomposition::max_clique_size() const {
  size_t m = 0;
  for (const auto& c : cliques) m = std::max(m, c.size());
  return static_cast<int>(m);
}

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> unite(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void rebuild_links(CliqueDecomposition& d) {
  d.links.clear();
  for (int c = 0; c < static_cast<int>(d.cliques.size()); ++c) {
    const int p = d.parent[c];
    if (p < 0) continue;
    d.links.push_back({p, c, intersect(d.cliques[p], d.cliques[c])});
  }
}

int find_root(std::vector<int>& uf, int x) {
  while (uf[x] != x) x = uf[x] = uf[uf[x]];
  return x;
}

}  // namespace

CliqueDecomposition clique_tree(const std::vector<std::vector<int>>& cliques, int num_vertices) {
  const int m = static_cast<int>(cliques.size());
  CliqueDecomposition d;
  d.num_vertices = num_vertices;
  d.cliques = cliques;
  for (auto& c : d.cliques) std::sort(c.begin(), c.end());

  std::vector<std::vector<int>> owners(num_vertices);
  for (int i = 0; i < m; ++i) {
    for (int v : d.cliques[i]) {
      if (v < 0 || v >= num_vertices) throw Error(ErrorCode::InvalidArgument, "clique vertex out of range");
      owners[v].push_back(i);
    }
  }
  std::map<std::pair<int, int>, int> weight;
  for (const auto& list : owners) {
    for (size_t a = 0; a < list.size(); ++a) {
      for (size_t b = a + 1; b < list.size(); ++b) ++weight[{list[a], list[b]}];
    }
  }
  struct Edge {
    int w, i, j;
  };
  std::vector<Edge> edges;
  for (const auto& [key, w] : weight) edges.push_back({w, key.first, key.second});
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return l.w > r.w; });

  std::vector<int> uf(m);
  std::iota(uf.begin(), uf.end(), 0);
  std::vector<std::vector<int>> tree(m);
  for (const Edge& e : edges) {
    const int a = find_root(uf, e.i), b = find_root(uf, e.j);
    if (a == b) continue;
    uf[std::max(a, b)] = std::min(a, b);
    tree[e.i].push_back(e.j);
    tree[e.j].push_back(e.i);
  }
  d.parent.assign(m, -1);
  std::vector<char> seen(m, 0);
  for (int r = 0; r < m; ++r) {
    if (seen[r]) continue;
    std::queue<int> q;
    q.push(r);
    seen[r] = 1;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      std::sort(tree[x].begin(), tree[x].end());
      for (int y : tree[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        d.parent[y] = x;
        q.push(y);
      }
    }
  }
  rebuild_links(d);
  if (!has_running_intersection(d)) {
    throw Error(ErrorCode::InvalidArgument, "cliques do not admit a clique tree (graph not chordal)");
  }
  return d;
}

CliqueDecomposition decompose(const SparsityGraph& g) {
  ChordalExtension ext = chordal_extension(g, amd_ordering(g));
  return clique_tree(ext.cliques, g.num_vertices());
}

CliqueDecomposition merge_cliques(const CliqueDecomposition& deco, int k_max, MergeParams params) {
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be nonnegative");
  CliqueDecomposition d = deco;
  for (int pass = 0; pass < k_max; ++pass) {
    const int m = static_cast<int>(d.cliques.size());
    std::vector<char> removed(m, 0);
    bool changed = false;
    for (int c = 0; c < m; ++c) {
      const int p = d.parent[c];
      if (p < 0 || removed[c]) continue;
      const auto shared = intersect(d.cliques[p], d.cliques[c]);
      const auto merged = unite(d.cliques[p], d.cliques[c]);
      auto cube = [](size_t s) { return static_cast<double>(s) * s * s; };
      const double s = static_cast<double>(shared.size());
      const double link_cost = params.link_weight * s * (s + 1.0) / 2.0;
      if (cube(merged.size()) > cube(d.cliques[p].size()) + cube(d.cliques[c].size()) + link_cost) continue;
      d.cliques[p] = merged;
      removed[c] = 1;
      for (int x = 0; x < m; ++x) {
        if (d.parent[x] == c) d.parent[x] = p;
      }
      d.parent[c] = -1;
      changed = true;
    }
    if (!changed) break;
    std::vector<int> remap(m, -1);
    CliqueDecomposition next;
    next.num_vertices = d.num_vertices;
    for (int c = 0; c < m; ++c) {
      if (removed[c]) continue;
      remap[c] = static_cast<int>(next.cliques.size());
      next.cliques.push_back(d.cliques[c]);
    }
    next.parent.assign(next.cliques.size(), -1);
    for (int c = 0; c < m; ++c) {
      if (!removed[c] && d.parent[c] >= 0) next.parent[remap[c]] = remap[d.parent[c]];
    }
    d = std::move(next);
    rebuild_links(d);
  }
  return d;
}

bool is_chordal(const SparsityGraph& g) {
  const int n = g.num_vertices();
  // Maximum cardinality search; the reverse visit order is a perfect
  // elimination ordering iff the graph is chordal.
  std::vector<int> weight(n, 0), visit_pos(n, -1);
  std::vector<int> visit;
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (visit_pos[v] < 0 && (best < 0 || weight[v] > weight[best])) best = v;
    }
    visit_pos[best] = step;
    visit.push_back(best);
    for (int w : g.neighbors(best)) {
      if (visit_pos[w] < 0) ++weight[w];
    }
  }
  // In elimination order (reverse visit), later neighbours of v are the
  // neighbours visited before v.
  for (int v = 0; v < n; ++v) {
    std::vector<int> earlier;
    for (int w : g.neighbors(v)) {
      if (visit_pos[w] < visit_pos[v]) earlier.push_back(w);
    }
    if (earlier.size() < 2) continue;
    const int u = *std::max_element(earlier.begin(), earlier.end(),
                                    [&](int a, int b) { return visit_pos[a] < visit_pos[b]; });
    for (int w : earlier) {
      if (w != u && !g.has_edge(u, w)) return false;
    }
  }
  return true;
}

bool has_running_intersection(const CliqueDecomposition& d) {
  const int m = static_cast<int>(d.cliques.size());
  std::vector<int> cliques_with(d.num_vertices, 0), edges_with(d.num_vertices, 0);
  for (int c = 0; c < m; ++c) {
    for (int v : d.cliques[c]) ++cliques_with[v];
    if (d.parent[c] >= 0) {
      for (int v : intersect(d.cliques[c], d.cliques[d.parent[c]])) ++edges_with[v];
    }
  }
  for (int v = 0; v < d.num_vertices; ++v) {
    if (cliques_with[v] > 0 && edges_with[v] != cliques_with[v] - 1) return false;
  }
  return true;
}

bool covers(const CliqueDecomposition& d, const SparsityGraph& g) {
  std::vector<std::vector<int>> owners(g.num_vertices());
  for (int c = 0; c < static_cast<int>(d.cliques.size()); ++c) {
    for (int v : d.cliques[c]) {
      if (v < g.num_vertices()) owners[v].push_back(c);
    }
  }
  for (int a = 0; a < g.num_vertices(); ++a) {
    if (owners[a].empty()) return false;
    for (int b : g.neighbors(a)) {
      if (b < a) continue;
      if (intersect(owners[a], owners[b]).empty()) return false;
    }
  }
  return true;
}

std::string cliques_jsonl(const CliqueDecomposition& d) {
  std::ostringstream os;
  for (int c = 0; c < static_cast<int>(d.cliques.size()); ++c) {
    nlohmann::json j;
    j["clique"] = c;
    j["parent"] = d.parent[c];
    j["vertices"] = d.cliques[c];
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace ropf
