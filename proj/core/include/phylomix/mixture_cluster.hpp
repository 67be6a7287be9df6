#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/phylogeny.hpp"
#include "phylomix/random_tree.hpp"
#include "phylomix/simulate.hpp"

namespace phylomix {

struct AlgoConfig {
  double f = 0.05;
  double g = 0.2;
  double nu_min = 0.5;
  int theta_count = 2;
  double sparsify_coefficient = 8.0;
  bool sparsify = true;
  double r_hat_margin = 0.0;
  // Also require r_hat above this many standard errors, estimated as
  // sqrt(r_ii r_jj / k) from the diagonal. Zero disables it.
  double r_hat_z = 5.0;
  // Only link two pairs when they share no leaf and every cross pair of their
  // leaves has q_hat below separation_factor * omega.
  bool require_separated = true;
  double separation_factor = 0.5;
  // Classes smaller than this are dropped as unattached before counting.
  int min_cluster_size = 2;
  // After threshold binning, reassign every site once by a Gaussian quadratic
  // discriminant on its sigma vector, with per-bin second moments and bin
  // frequencies as the class parameters.
  bool refine_bins = true;
  // Report the inferred cluster count instead of failing on a mismatch.
  bool discover_theta = false;
  std::uint64_t seed = 1;

  // Throws InvalidArgument unless 0 < f <= g, 0 < nu_min <= 1/theta_count,
  // theta_count >= 1 and the coefficient and margin are non-negative.
  void validate() const;
};

struct DerivedConstants {
  // Quasicherry radius: -ln(nu_min e^{-4g} / (3 theta (1 - nu_min))).
  double c_c = 0.0;
  // Quasicherry threshold on q_hat: (2/3) nu_min e^{-4g}.
  double omega = 0.0;
  // Site binning threshold: e^{-c_c} / 2.
  double c_delta = 0.0;
  // Sparsification keep probability C log n / n, capped at 1.
  double p_sp = 0.0;
};

DerivedConstants derive_constants(const AlgoConfig& cfg, int n);

struct SiteBinning {
  // bins[theta] holds the sorted site indices assigned to component theta.
  std::vector<std::vector<int>> bins;
  // Sites in no bin. The argmax rule leaves this empty; kept for callers that
  // build binnings by other means.
  std::vector<int> unassigned;
  // Sites where zero or several statistics exceeded the threshold.
  int ambiguity_count = 0;
};

// Pairs with q_hat >= omega.
PairSet find_quasicherries(const SiteData& data, const DerivedConstants& dc);
PairSet find_quasicherries(const Eigen::MatrixXd& q_hat_all, const DerivedConstants& dc);

// Keeps each pair independently with probability dc.p_sp.
PairSet sparsify(const PairSet& pairs, const DerivedConstants& dc, Rng& rng);

struct ClusterResult {
  std::vector<PairSet> clusters;
  // Pairs left in classes below cfg.min_cluster_size.
  std::size_t unattached = 0;
  // Edges joined despite an r_hat at or below -margin on a pair inside the
  // same class (transitive closure overriding a negative edge).
  int negative_edges_within = 0;
};

// Connected components of the graph on `pairs` with an edge wherever r_hat
// clears both margins (and, with cfg.require_separated, the two pairs are
// separated under q_hat_all), sorted by size (descending) then smallest pair.
// Throws ComponentCountMismatch unless the count equals cfg.theta_count or
// cfg.discover_theta is set.
ClusterResult infer_clusters(const SiteData& data, const PairSet& pairs,
                             const AlgoConfig& cfg);
// Same, from a precomputed r_hat matrix over `pairs` estimated from k sites.
// q_hat_all is only read when cfg.require_separated is set.
ClusterResult infer_clusters(const Eigen::MatrixXd& r, const PairSet& pairs,
                             const AlgoConfig& cfg, const Eigen::MatrixXd& q_hat_all,
                             double omega, int k);

// True when c1 and c2 share no leaf and none of their four cross pairs has
// q_hat >= threshold.
bool separated(const LeafPair& c1, const LeafPair& c2, const Eigen::MatrixXd& q_hat_all,
               double threshold);

// U_theta^i for every site and cluster, as a k x Theta matrix.
Eigen::MatrixXd clustering_statistic_table(const SiteData& data,
                                           const std::vector<PairSet>& clusters);

// A site goes to the unique cluster whose statistic exceeds c_delta; with
// zero or several such clusters it goes to the argmax and counts as
// ambiguous.
SiteBinning bin_sites(const SiteData& data, const std::vector<PairSet>& clusters,
                      const DerivedConstants& dc);
SiteBinning bin_sites(const Eigen::MatrixXd& stats, const DerivedConstants& dc);

// One round of quadratic discriminant reassignment. Returns nullopt, leaving
// the caller's binning in force, when some bin has at most n sites or a
// second-moment matrix is not positive definite.
std::optional<SiteBinning> refine_binning(const SiteData& data, const SiteBinning& bins);

struct PipelineDiagnostics {
  DerivedConstants constants;
  int n = 0;
  int k = 0;
  std::size_t quasicherry_count = 0;
  std::size_t sparsified_count = 0;
  std::vector<std::size_t> cluster_sizes;
  std::size_t unattached = 0;
  std::vector<std::size_t> bin_sizes;
  int ambiguity_count = 0;
  bool refined = false;
  int refine_moved = 0;  // sites whose bin changed in refinement
  int negative_edges_within = 0;
  int theta_found = 0;
};

struct PipelineResult {
  SiteBinning binning;
  std::vector<PairSet> clusters;
  PairSet candidates;     // the sparsified quasicherries fed to clustering
  Eigen::MatrixXd r_hat;  // over candidates; empty when clustering is skipped
  PipelineDiagnostics diagnostics;
  Eigen::MatrixXd statistics;  // k x Theta clustering statistics
};

// derive_constants -> find_quasicherries -> sparsify -> infer_clusters ->
// bin_sites (-> refine_binning). Throws NoQuasicherries, ComponentCountMismatch or EmptyBin.
// Refuses data that still carries hidden component labels.
PipelineResult run_pipeline(const SiteData& data, const AlgoConfig& cfg);

}  // namespace phylomix
