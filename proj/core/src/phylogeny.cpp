#include "phylomix/phylogeny.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "phylomix/errors.hpp"

namespace phylomix {

LeafPair::LeafPair(int x, int y) : a(std::min(x, y)), b(std::max(x, y)) {
  if (x == y) throw InvalidArgument("leaf pair needs two distinct leaves");
}

Phylogeny::Phylogeny(int n, std::vector<TreeEdge> edges)
    : n_(n), edges_(std::move(edges)) {
  if (n < 2) throw ValidationError("a phylogeny needs at least 2 leaves");
  const int vcount = 2 * n - 2;
  if (static_cast<int>(edges_.size()) != vcount - 1) {
    throw ValidationError("expected " + std::to_string(vcount - 1) + " edges, got " +
                          std::to_string(edges_.size()));
  }
  adj_.assign(vcount, {});
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const auto& edge = edges_[e];
    if (edge.u < 0 || edge.v < 0 || edge.u >= vcount || edge.v >= vcount ||
        edge.u == edge.v) {
      throw ValidationError("edge endpoint out of range");
    }
    if (!std::isfinite(edge.w) || !(edge.w > 0.0)) {
      throw ValidationError("edge weights must be finite and positive");
    }
    adj_[edge.u].push_back({edge.v, e});
    adj_[edge.v].push_back({edge.u, e});
  }
  for (int v = 0; v < vcount; ++v) {
    const std::size_t want = v < n ? 1 : 3;
    if (adj_[v].size() != want) {
      throw ValidationError(std::string(v < n ? "leaf" : "internal vertex") +
                            " with degree " + std::to_string(adj_[v].size()));
    }
  }
  // |E| = |V| - 1 plus connectivity makes it a tree.
  std::vector<char> seen(vcount, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& nb : adj_[v]) {
      if (!seen[nb.vertex]) {
        seen[nb.vertex] = 1;
        ++reached;
        stack.push_back(nb.vertex);
      }
    }
  }
  if (reached != vcount) throw ValidationError("edges do not form a connected tree");
}

std::vector<double> Phylogeny::distances_from_vertex(int vertex) const {
  std::vector<double> dist(adj_.size(), -1.0);
  std::vector<int> stack{vertex};
  dist[vertex] = 0.0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& nb : adj_[v]) {
      if (dist[nb.vertex] < 0.0) {
        dist[nb.vertex] = dist[v] + edges_[nb.edge].w;
        stack.push_back(nb.vertex);
      }
    }
  }
  return dist;
}

double Phylogeny::distance(int a, int b) const {
  if (a < 1 || a > n_ || b < 1 || b > n_) {
    throw InvalidArgument("unknown leaf label");
  }
  if (a == b) return 0.0;
  return distances_from_vertex(a - 1)[b - 1];
}

Eigen::MatrixXd Phylogeny::distance_matrix() const {
  Eigen::MatrixXd d(n_, n_);
  for (int a = 0; a < n_; ++a) {
    const auto dist = distances_from_vertex(a);
    for (int b = 0; b < n_; ++b) d(a, b) = dist[b];
    d(a, a) = 0.0;
  }
  return d;
}

bool Phylogeny::is_regular(double f, double g) const {
  return std::all_of(edges_.begin(), edges_.end(),
                     [&](const TreeEdge& e) { return e.w >= f && e.w <= g; });
}

Phylogeny Phylogeny::relabeled(std::span<const int> new_label) const {
  if (static_cast<int>(new_label.size()) != n_) {
    throw InvalidArgument("relabeling has the wrong length");
  }
  std::vector<char> used(n_, 0);
  for (int l : new_label) {
    if (l < 1 || l > n_ || used[l - 1]) {
      throw InvalidArgument("relabeling is not a permutation");
    }
    used[l - 1] = 1;
  }
  auto map = [&](int v) { return v < n_ ? new_label[v] - 1 : v; };
  std::vector<TreeEdge> edges = edges_;
  for (auto& e : edges) {
    e.u = map(e.u);
    e.v = map(e.v);
  }
  return Phylogeny(n_, std::move(edges));
}

Phylogeny Phylogeny::with_weights(std::span<const double> weights) const {
  if (weights.size() != edges_.size()) {
    throw InvalidArgument("weight vector has the wrong length");
  }
  std::vector<TreeEdge> edges = edges_;
  for (std::size_t e = 0; e < edges.size(); ++e) edges[e].w = weights[e];
  return Phylogeny(n_, std::move(edges));
}

PairSet::PairSet(std::vector<LeafPair> pairs) : pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

PairSet::PairSet(std::vector<LeafPair> pairs, std::vector<int> tags) {
  if (pairs.size() != tags.size()) {
    throw InvalidArgument("pair and tag counts differ");
  }
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pairs[x] < pairs[y]; });
  for (std::size_t i : order) {
    if (!pairs_.empty() && pairs_.back() == pairs[i]) continue;
    pairs_.push_back(pairs[i]);
    tags_.push_back(tags[i]);
  }
}

bool PairSet::contains(const LeafPair& p) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), p);
}

PairSet upsilon_alpha(const Phylogeny& tree, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  std::vector<LeafPair> out;
  struct Frame {
    int vertex;
    int from;
    double dist;
  };
  std::vector<Frame> stack;
  for (int leaf = 0; leaf < tree.n(); ++leaf) {
    stack.clear();
    stack.push_back({leaf, -1, 0.0});
    while (!stack.empty()) {
      const Frame fr = stack.back();
      stack.pop_back();
      if (tree.is_leaf(fr.vertex) && fr.vertex > leaf) {
        out.emplace_back(leaf + 1, fr.vertex + 1);
      }
      for (const auto& nb : tree.neighbors(fr.vertex)) {
        if (nb.vertex == fr.from) continue;
        const double d = fr.dist + tree.edges()[nb.edge].w;
        if (d <= alpha) stack.push_back({nb.vertex, fr.vertex, d});
      }
    }
  }
  return PairSet(std::move(out));
}

std::vector<Split> nontrivial_splits(const Phylogeny& tree) {
  const int n = tree.n();
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  std::vector<Split> below(tree.vertex_count(), Split(words, 0));
  std::vector<int> size(tree.vertex_count(), 0);
  // Iterative post-order from leaf label 1.
  std::vector<int> parent(tree.vertex_count(), -1);
  std::vector<int> order;
  std::vector<int> stack{0};
  parent[0] = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (const auto& nb : tree.neighbors(v)) {
      if (parent[nb.vertex] == -1) {
        parent[nb.vertex] = v;
        stack.push_back(nb.vertex);
      }
    }
  }
  std::vector<Split> out;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    if (v == 0) continue;
    if (tree.is_leaf(v)) {
      below[v][v / 64] |= std::uint64_t{1} << (v % 64);
      size[v] = 1;
    } else if (size[v] >= 2 && size[v] <= n - 2) {
      out.push_back(below[v]);
    }
    const int p = parent[v];
    for (std::size_t w = 0; w < words; ++w) below[p][w] |= below[v][w];
    size[p] += size[v];
  }
  std::sort(out.begin(), out.end());
  return out;
}

int rf_distance(const Phylogeny& t1, const Phylogeny& t2) {
  if (t1.n() != t2.n()) throw InvalidArgument("trees have different leaf sets");
  const auto s1 = nontrivial_splits(t1);
  const auto s2 = nontrivial_splits(t2);
  std::vector<Split> diff;
  std::set_symmetric_difference(s1.begin(), s1.end(), s2.begin(), s2.end(),
                                std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

}  // namespace phylomix
