#include "phylomix/harness/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "phylomix/errors.hpp"

namespace phylomix::harness {

namespace {

constexpr std::size_t kMaxMatched = 9;

std::vector<int> identity(std::size_t m) {
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

}  // namespace

Matching best_matching(const std::vector<Phylogeny>& truth,
                       const std::vector<Phylogeny>& reconstructed) {
  const std::size_t m = truth.size();
  if (reconstructed.size() != m) {
    throw InvalidArgument("truth and reconstruction have different component counts");
  }
  if (m == 0) throw InvalidArgument("no components to match");
  if (m > kMaxMatched) throw InvalidArgument("too many components to match exhaustively");
  for (std::size_t i = 0; i < m; ++i) {
    if (truth[i].n() != truth[0].n() || reconstructed[i].n() != truth[0].n()) {
      throw InvalidArgument("leaf sets differ between trees");
    }
  }
  // rf[t][c] for reconstructed t against truth c.
  std::vector<std::vector<int>> rf(m, std::vector<int>(m));
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t c = 0; c < m; ++c) rf[t][c] = rf_distance(reconstructed[t], truth[c]);
  }
  std::vector<int> perm = identity(m);
  Matching best;
  best.total_rf = -1;
  do {
    int total = 0;
    for (std::size_t t = 0; t < m; ++t) total += rf[t][perm[t]];
    if (best.total_rf < 0 || total < best.total_rf) {
      best.total_rf = total;
      best.h = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t t = 0; t < m; ++t) best.rf.push_back(rf[t][best.h[t]]);
  return best;
}

double binning_accuracy(const SiteBinning& bins, const std::vector<int>& hidden,
                        const std::vector<int>& h) {
  if (h.size() != bins.bins.size()) throw InvalidArgument("matching has the wrong size");
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t t = 0; t < bins.bins.size(); ++t) {
    for (int i : bins.bins[t]) {
      if (i < 0 || static_cast<std::size_t>(i) >= hidden.size()) {
        throw InvalidArgument("bin refers to a site outside the hidden labels");
      }
      correct += hidden[i] == h[t];
      ++total;
    }
  }
  total += bins.unassigned.size();
  if (total != hidden.size()) throw InvalidArgument("bins do not cover the sites");
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

double best_binning_accuracy(const SiteBinning& bins, const std::vector<int>& hidden) {
  const std::size_t m = bins.bins.size();
  if (m == 0 || m > kMaxMatched) throw InvalidArgument("unsupported number of bins");
  std::vector<int> perm = identity(m);
  double best = 0.0;
  do {
    best = std::max(best, binning_accuracy(bins, hidden, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

SiteBinning binning_from_assignment(const std::vector<int>& assignment, int theta) {
  SiteBinning out;
  out.bins.resize(theta);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int t = assignment[i];
    if (t < 0 || t >= theta) throw InvalidArgument("assignment outside 0..theta-1");
    out.bins[t].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> assignment_from_binning(const SiteBinning& bins, int k) {
  std::vector<int> out(k, -1);
  for (std::size_t t = 0; t < bins.bins.size(); ++t) {
    for (int i : bins.bins[t]) {
      if (i < 0 || i >= k) throw InvalidArgument("bin refers to a site out of range");
      out[i] = static_cast<int>(t);
    }
  }
  return out;
}

}  // namespace phylomix::harness
