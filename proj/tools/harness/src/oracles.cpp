#include "phylomix/harness/oracles.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "phylomix/errors.hpp"

namespace phylomix::harness::oracle {

std::uint64_t topology_count(int n) {
  std::uint64_t out = 1;
  for (int m = 3; m <= 2 * n - 5; m += 2) out *= static_cast<std::uint64_t>(m);
  return out;
}

std::vector<Phylogeny> enumerate_topologies(int n, double w) {
  if (n < 3) throw InvalidArgument("enumeration needs n >= 3");
  // Edge lists with leaves 0..m-1 and internal vertices offset by
  // kInternalBase, renumbered once the leaf count is final.
  using Edges = std::vector<std::pair<int, int>>;
  constexpr int kInternalBase = 1000;
  std::vector<Edges> current{{{0, kInternalBase}, {1, kInternalBase}, {2, kInternalBase}}};
  for (int leaf = 3; leaf < n; ++leaf) {
    std::vector<Edges> next;
    for (const auto& edges : current) {
      const int fresh = kInternalBase + leaf - 2;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        Edges grown = edges;
        const auto [u, v] = edges[e];
        grown[e] = {u, fresh};
        grown.push_back({fresh, v});
        grown.push_back({leaf, fresh});
        next.push_back(std::move(grown));
      }
    }
    current = std::move(next);
  }
  std::vector<Phylogeny> out;
  out.reserve(current.size());
  for (const auto& edges : current) {
    std::vector<TreeEdge> te;
    for (auto [u, v] : edges) {
      auto map = [&](int x) { return x >= kInternalBase ? n + (x - kInternalBase) : x; };
      te.push_back({map(u), map(v), w});
    }
    out.emplace_back(n, std::move(te));
  }
  return out;
}

Eigen::MatrixXd floyd_distances(const Phylogeny& tree) {
  const int v = tree.vertex_count();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(v, v, inf);
  for (int i = 0; i < v; ++i) d(i, i) = 0.0;
  for (const auto& e : tree.edges()) d(e.u, e.v) = d(e.v, e.u) = e.w;
  for (int m = 0; m < v; ++m) {
    for (int i = 0; i < v; ++i) {
      for (int j = 0; j < v; ++j) d(i, j) = std::min(d(i, j), d(i, m) + d(m, j));
    }
  }
  return d.topLeftCorner(tree.n(), tree.n());
}

namespace {

std::vector<std::vector<int>> adjacency(const Phylogeny& tree) {
  std::vector<std::vector<int>> adj(tree.vertex_count());
  for (const auto& e : tree.edges()) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

// Vertices on the path between two vertices, by BFS parents.
std::set<int> path_vertices(const std::vector<std::vector<int>>& adj, int s, int t) {
  std::vector<int> parent(adj.size(), -2);
  std::queue<int> q;
  q.push(s);
  parent[s] = -1;
  while (!q.empty()) {
    const int x = q.front();
    q.pop();
    for (int y : adj[x]) {
      if (parent[y] == -2) {
        parent[y] = x;
        q.push(y);
      }
    }
  }
  std::set<int> out;
  for (int x = t; x != -1; x = parent[x]) out.insert(x);
  return out;
}

bool disjoint(const std::set<int>& x, const std::set<int>& y) {
  for (int v : x) {
    if (y.count(v)) return false;
  }
  return true;
}

int quartet_split_adj(const std::vector<std::vector<int>>& adj, int a, int b, int c, int d) {
  if (disjoint(path_vertices(adj, a, b), path_vertices(adj, c, d))) return 0;
  if (disjoint(path_vertices(adj, a, c), path_vertices(adj, b, d))) return 1;
  return 2;
}

// Vertex sets of every leaf-to-leaf path, for trees small enough to fit a
// fixed-width bitset. Same disjointness rule as above, minus the repeated
// searches.
constexpr std::size_t kMaxVertices = 512;

class PathTable {
 public:
  explicit PathTable(const Phylogeny& tree) : n_(tree.n()), paths_(n_ * n_) {
    if (static_cast<std::size_t>(tree.vertex_count()) > kMaxVertices) {
      throw InvalidArgument("tree too large for the quartet oracle");
    }
    const auto adj = adjacency(tree);
    for (int a = 0; a < n_; ++a) {
      for (int b = a + 1; b < n_; ++b) {
        std::bitset<kMaxVertices> mask;
        for (int v : path_vertices(adj, a, b)) mask.set(v);
        paths_[a * n_ + b] = paths_[b * n_ + a] = mask;
      }
    }
  }
  int split(int a, int b, int c, int d) const {
    if ((path(a, b) & path(c, d)).none()) return 0;
    if ((path(a, c) & path(b, d)).none()) return 1;
    return 2;
  }

 private:
  const std::bitset<kMaxVertices>& path(int a, int b) const { return paths_[a * n_ + b]; }
  int n_;
  std::vector<std::bitset<kMaxVertices>> paths_;
};

// Leaf-side bit vectors of every internal edge, normalized so leaf 0 is out.
std::set<std::vector<bool>> edge_splits(const Phylogeny& tree) {
  const auto adj = adjacency(tree);
  std::set<std::vector<bool>> out;
  for (const auto& e : tree.edges()) {
    if (tree.is_leaf(e.u) || tree.is_leaf(e.v)) continue;
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{e.v};
    seen[e.u] = seen[e.v] = 1;
    std::vector<bool> side(tree.n(), false);
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (tree.is_leaf(x)) side[x] = true;
      for (int y : adj[x]) {
        if (!seen[y]) {
          seen[y] = 1;
          stack.push_back(y);
        }
      }
    }
    if (side[0]) side.flip();
    out.insert(side);
  }
  return out;
}

}  // namespace

int quartet_split(const Phylogeny& tree, int a, int b, int c, int d) {
  return quartet_split_adj(adjacency(tree), a - 1, b - 1, c - 1, d - 1);
}

bool same_topology(const Phylogeny& t1, const Phylogeny& t2) {
  if (t1.n() != t2.n()) return false;
  const PathTable p1(t1);
  const PathTable p2(t2);
  const int n = t1.n();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        for (int d = c + 1; d < n; ++d) {
          if (p1.split(a, b, c, d) != p2.split(a, b, c, d)) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

int brute_force_rf(const Phylogeny& t1, const Phylogeny& t2) {
  if (t1.n() != t2.n()) throw InvalidArgument("leaf counts differ");
  const auto s1 = edge_splits(t1);
  const auto s2 = edge_splits(t2);
  int shared = 0;
  for (const auto& s : s1) shared += static_cast<int>(s2.count(s));
  return static_cast<int>(s1.size() + s2.size()) - 2 * shared;
}

std::size_t max_agreement(const Eigen::MatrixXd& d, const std::vector<Phylogeny>& candidates) {
  if (candidates.empty()) throw InvalidArgument("no candidates");
  const int n = static_cast<int>(d.rows());
  // Four-point split of every quartet under d.
  std::vector<int> observed;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        for (int e = c + 1; e < n; ++e) {
          const double s[3] = {d(a, b) + d(c, e), d(a, c) + d(b, e), d(a, e) + d(b, c)};
          observed.push_back(static_cast<int>(std::min_element(s, s + 3) - s));
        }
      }
    }
  }
  std::size_t best = 0;
  long best_score = -1;
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    const PathTable paths(candidates[t]);
    long score = 0;
    std::size_t q = 0;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        for (int c = b + 1; c < n; ++c) {
          for (int e = c + 1; e < n; ++e) {
            score += paths.split(a, b, c, e) == observed[q++];
          }
        }
      }
    }
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  return best;
}

Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int i = 1; i <= 30; ++i) {
    term = term * scaled / static_cast<double>(i);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

std::size_t upsilon_size(const Phylogeny& tree, double alpha) {
  const Eigen::MatrixXd d = floyd_distances(tree);
  std::size_t count = 0;
  for (int a = 0; a < tree.n(); ++a) {
    for (int b = a + 1; b < tree.n(); ++b) count += d(a, b) <= alpha;
  }
  return count;
}

RawGtr random_gtr(int r, Rng& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::uniform_real_distribution<double> exch(0.1, 2.0);
  RawGtr out;
  out.pi.resize(r);
  for (int i = 0; i < r; ++i) out.pi(i) = gamma(rng) + 1e-3;
  out.pi /= out.pi.sum();
  out.q = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      const double s = exch(rng);
      out.q(i, j) = s * out.pi(j);
      out.q(j, i) = s * out.pi(i);
    }
  }
  for (int i = 0; i < r; ++i) out.q(i, i) = -out.q.row(i).sum();
  return out;
}

Phylogeny caterpillar(int n, double w) {
  if (n < 3) throw InvalidArgument("caterpillar needs n >= 3");
  // Spine n .. 2n-3; leaf 0 and leaf 1 hang off the first spine vertex, the
  // last leaf off the final one.
  std::vector<TreeEdge> edges;
  edges.push_back({0, n, w});
  edges.push_back({1, n, w});
  for (int i = 2; i < n - 1; ++i) {
    edges.push_back({n + i - 2, n + i - 1, w});
    edges.push_back({i, n + i - 1, w});
  }
  edges.push_back({n - 1, 2 * n - 3, w});
  return Phylogeny(n, std::move(edges));
}

}  // namespace phylomix::harness::oracle
