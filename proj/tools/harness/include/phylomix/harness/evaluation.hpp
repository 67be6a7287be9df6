#pragma once

#include <vector>

#include "phylomix/mixture_cluster.hpp"
#include "phylomix/phylogeny.hpp"

namespace phylomix::harness {

// Component matching h: reconstructed index t corresponds to truth[h[t]].
struct Matching {
  std::vector<int> h;
  std::vector<int> rf;  // rf[t] = RF(reconstructed[t], truth[h[t]])
  int total_rf = 0;
};

// Exhaustive search over bijections for the smallest total RF; ties go to the
// lexicographically first permutation. Requires equal counts (at most 9) and
// matching leaf counts.
Matching best_matching(const std::vector<Phylogeny>& truth,
                       const std::vector<Phylogeny>& reconstructed);

// Fraction of sites whose bin t satisfies h[t] == hidden[site].
double binning_accuracy(const SiteBinning& bins, const std::vector<int>& hidden,
                        const std::vector<int>& h);
// Same, maximized over all bijections h.
double best_binning_accuracy(const SiteBinning& bins, const std::vector<int>& hidden);

// Bins built from a per-site assignment vector (values 0..theta-1).
SiteBinning binning_from_assignment(const std::vector<int>& assignment, int theta);
std::vector<int> assignment_from_binning(const SiteBinning& bins, int k);

}  // namespace phylomix::harness
