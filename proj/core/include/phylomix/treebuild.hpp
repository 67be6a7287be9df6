#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/mixture_cluster.hpp"
#include "phylomix/phylogeny.hpp"
#include "phylomix/simulate.hpp"

namespace phylomix {

// Symmetric estimate of a tree metric that is only trusted on short
// distances: whenever the true or estimated distance is below psi + tau, the
// two differ by less than tau. Entries may be +infinity.
struct DistortedMetric {
  Eigen::MatrixXd d;  // n x n, indexed by label - 1
  double tau = 0.0;
  double psi = 0.0;
  // Optional standard errors of the entries (same shape as d, or empty).
  Eigen::MatrixXd se;

  int n() const { return static_cast<int>(d.rows()); }
  // Throws ValidationError on asymmetry, a nonzero diagonal, or negative or
  // NaN entries.
  void validate() const;
};

// d(a,b) = -ln(q_hat_theta(a,b)) over the sites in bin `theta`, +infinity
// where q_hat_theta <= 0. Records tau = f/5, psi = 5 g ln n and delta-method
// standard errors sd(sigma_a sigma_b) / (sqrt(K) q_hat).
DistortedMetric estimate_distorted_metric(const SiteData& data, const SiteBinning& bins,
                                          int theta, double f, double g);
DistortedMetric distorted_metric_from_q(const Eigen::MatrixXd& q, double f, double g);

struct DistortionReport {
  std::vector<LeafPair> violations;
  bool ok() const { return violations.empty(); }
};

DistortionReport check_distortion(const DistortedMetric& dm, const Phylogeny& tree);

struct ReconstructOptions {
  // Entries at or above this are ignored. NaN selects psi + tau.
  double reliable_radius = std::numeric_limits<double>::quiet_NaN();
  // When the metric carries standard errors, entries whose error exceeds
  // noise_budget * f are ignored as well. Zero or less disables this.
  double noise_budget = 0.4;
  // Shallowest leaves kept per merged subtree for quartet tests.
  int representatives = 3;
  // Merge the most plausible pair instead of throwing when no pair passes
  // every quartet test (for noisy desk-scale metrics).
  bool fallback = false;
};

struct ReconstructStats {
  int forced_merges = 0;  // merges taken through the fallback
  bool contract_warning = false;
};

// Agglomerative cherry picking. Subtrees are represented by a few of their
// shallowest leaves, so every quartet test reads original metric entries.
// Whenever dm is a (tau, psi)-distortion of a tree in the regular(f, g) class
// with tau <= f/5 and psi >= 5 g ln n, the returned topology is that tree's.
// Edge weights of the result are rough estimates, clamped to be positive.
// Throws InconsistentMetric when no pair passes the cherry test.
Phylogeny reconstruct_topology(const DistortedMetric& dm, double f, double g,
                               const ReconstructOptions& options = {},
                               ReconstructStats* stats = nullptr);

// One topology per bin; the components run in parallel. When stats is given
// it receives one entry per component.
std::vector<Phylogeny> reconstruct_all(const SiteData& data, const SiteBinning& bins,
                                       const AlgoConfig& cfg,
                                       const ReconstructOptions& options = {},
                                       std::vector<ReconstructStats>* stats = nullptr);

}  // namespace phylomix
