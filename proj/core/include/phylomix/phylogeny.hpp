#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace phylomix {

// Unordered pair of leaf labels stored with a < b. Labels are 1-based.
struct LeafPair {
  int a = 0;
  int b = 0;

  LeafPair() = default;
  LeafPair(int x, int y);

  friend auto operator<=>(const LeafPair&, const LeafPair&) = default;
};

struct TreeEdge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

// Unrooted binary tree with positive edge weights. Leaves are vertices
// 0..n-1 and leaf vertex i carries label i+1; internal vertices are
// n..2n-3. Immutable after construction.
class Phylogeny {
 public:
  struct Adjacent {
    int vertex;
    int edge;
  };

  Phylogeny() = default;
  // Validates degrees, connectivity and weights. Throws ValidationError.
  Phylogeny(int n, std::vector<TreeEdge> edges);

  int n() const { return n_; }
  int vertex_count() const { return static_cast<int>(adj_.size()); }
  bool is_leaf(int vertex) const { return vertex < n_; }
  const std::vector<TreeEdge>& edges() const { return edges_; }
  std::span<const Adjacent> neighbors(int vertex) const { return adj_[vertex]; }

  // Path length between two leaf labels.
  double distance(int a, int b) const;
  // Distances from one vertex to every vertex.
  std::vector<double> distances_from_vertex(int vertex) const;
  // n x n leaf metric, indexed by label - 1.
  Eigen::MatrixXd distance_matrix() const;

  bool is_regular(double f, double g) const;

  // new_label[a - 1] is the label that leaf a receives. Must be a
  // permutation of [n].
  Phylogeny relabeled(std::span<const int> new_label) const;
  // Same topology with every weight replaced.
  Phylogeny with_weights(std::span<const double> weights) const;

 private:
  int n_ = 0;
  std::vector<TreeEdge> edges_;
  std::vector<std::vector<Adjacent>> adj_;
};

// Set of distinct unordered leaf pairs, kept sorted. Optionally tagged with a
// 0-based component index per pair.
class PairSet {
 public:
  PairSet() = default;
  explicit PairSet(std::vector<LeafPair> pairs);
  PairSet(std::vector<LeafPair> pairs, std::vector<int> tags);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<LeafPair>& pairs() const { return pairs_; }
  const LeafPair& operator[](std::size_t i) const { return pairs_[i]; }
  bool contains(const LeafPair& p) const;

  bool has_tags() const { return !tags_.empty(); }
  const std::vector<int>& tags() const { return tags_; }

  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  friend bool operator==(const PairSet& x, const PairSet& y) {
    return x.pairs_ == y.pairs_;
  }

 private:
  std::vector<LeafPair> pairs_;
  std::vector<int> tags_;
};

inline double tree_metric(const Phylogeny& tree, int a, int b) {
  return tree.distance(a, b);
}

// Pairs at tree distance <= alpha, found by a traversal from each leaf that
// stops once the accumulated length exceeds alpha.
PairSet upsilon_alpha(const Phylogeny& tree, double alpha);

// Bipartitions induced by internal edges, each stored as a bitmask over
// labels 1..n normalized to the side not containing label 1.
using Split = std::vector<std::uint64_t>;
std::vector<Split> nontrivial_splits(const Phylogeny& tree);

// Robinson-Foulds distance: nontrivial splits present in exactly one tree.
int rf_distance(const Phylogeny& t1, const Phylogeny& t2);

}  // namespace phylomix
