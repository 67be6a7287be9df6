#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "phylomix/gtr_model.hpp"
#include "phylomix/phylogeny.hpp"

namespace phylomix {

using Rng = std::mt19937_64;

// Seed of the independent stream `index` under `master` (splitmix64 mixing).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

enum class TopologyPrior { kUniform, kYule };

// Random regular(f, g) phylogeny. The uniform prior adds leaves one at a time
// on a uniformly chosen edge, which is uniform over labeled unrooted binary
// topologies; weights are i.i.d. Uniform[f, g].
Phylogeny random_phylogeny(int n, double f, double g, Rng& rng,
                           TopologyPrior prior = TopologyPrior::kUniform);

// Uniformly random permutation of [n] in the form Phylogeny::relabeled takes.
std::vector<int> random_labeling(int n, Rng& rng);

struct MixtureModel {
  std::vector<Phylogeny> components;
  std::vector<double> nu;
  RateMatrix rm;

  int theta_count() const { return static_cast<int>(components.size()); }
  int n() const { return components.empty() ? 0 : components.front().n(); }
  // Throws ValidationError unless nu is a positive probability vector of the
  // right length and every component has the same leaf count.
  void validate(double nu_min = 0.0) const;
};

// Theta independent random phylogenies, each relabeled by an independent
// uniform permutation.
MixtureModel permutation_invariant_mixture(int theta_count, int n, double f, double g,
                                           std::vector<double> nu, const RateMatrix& rm,
                                           Rng& rng,
                                           TopologyPrior prior = TopologyPrior::kUniform);

}  // namespace phylomix
