#pragma once

// Slow, independent reference computations. They deliberately avoid the
// library's own traversal and spectral code so tests can pit one against
// the other.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/phylogeny.hpp"
#include "phylomix/random_tree.hpp"

namespace phylomix::harness::oracle {

// (2n-5)!! for n >= 3, 1 for n < 3.
std::uint64_t topology_count(int n);

// Every unrooted binary topology on labels 1..n (n >= 3), all weights w.
// Built by inserting leaf n on each edge of every topology on n-1 leaves.
std::vector<Phylogeny> enumerate_topologies(int n, double w = 1.0);

// All-pairs leaf distances by Floyd-Warshall over the edge list.
Eigen::MatrixXd floyd_distances(const Phylogeny& tree);

// 0 when the quartet splits as ab|cd, 1 for ac|bd, 2 for ad|bc, judged by
// vertex-disjointness of paths.
int quartet_split(const Phylogeny& tree, int a, int b, int c, int d);

// True when every quartet has the same split in both trees. O(n^4).
bool same_topology(const Phylogeny& t1, const Phylogeny& t2);

// RF distance from splits found by deleting each edge and flooding.
int brute_force_rf(const Phylogeny& t1, const Phylogeny& t2);

// Index of the candidate whose quartet splits agree most often with the
// four-point rule applied to d; ties go to the lowest index.
std::size_t max_agreement(const Eigen::MatrixXd& d, const std::vector<Phylogeny>& candidates);

// exp(A) by scaling and squaring of a 30-term Taylor series.
Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a);

// Pairs at distance <= alpha from the Floyd-Warshall metric.
std::size_t upsilon_size(const Phylogeny& tree, double alpha);

// Random GTR generator with r states: Dirichlet(1) stationary distribution
// and exchangeabilities uniform on [0.1, 2].
struct RawGtr {
  Eigen::MatrixXd q;
  Eigen::VectorXd pi;
};
RawGtr random_gtr(int r, Rng& rng);

// A caterpillar (path-like) phylogeny on labels 1..n with all weights w.
Phylogeny caterpillar(int n, double w);

}  // namespace phylomix::harness::oracle
