#include "phylomix/treebuild.hpp"

#include <algorithm>
#include <cmath>

#include "phylomix/errors.hpp"
#include "phylomix/estimators.hpp"
#include "phylomix/parallel.hpp"

namespace phylomix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinWeight = 1e-8;

}  // namespace

void DistortedMetric::validate() const {
  if (d.rows() != d.cols()) throw ValidationError("distorted metric is not square");
  for (Eigen::Index a = 0; a < d.rows(); ++a) {
    if (d(a, a) != 0.0) throw ValidationError("distorted metric has a nonzero diagonal");
    for (Eigen::Index b = 0; b < d.cols(); ++b) {
      if (std::isnan(d(a, b)) || d(a, b) < 0.0) {
        throw ValidationError("distorted metric has a negative or NaN entry");
      }
      if (d(a, b) != d(b, a)) throw ValidationError("distorted metric is not symmetric");
    }
  }
  if (se.size() != 0 && (se.rows() != d.rows() || se.cols() != d.cols())) {
    throw ValidationError("standard error matrix shape differs from the metric");
  }
}

DistortedMetric distorted_metric_from_q(const Eigen::MatrixXd& q, double f, double g) {
  const Eigen::Index n = q.rows();
  DistortedMetric dm;
  dm.d.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    dm.d(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = 0.5 * (q(a, b) + q(b, a));
      // Estimates above 1 map to 0; a distance cannot be negative.
      const double dist = v > 0.0 ? std::max(0.0, -std::log(v)) : kInf;
      dm.d(a, b) = dm.d(b, a) = dist;
    }
  }
  dm.tau = f / 5.0;
  dm.psi = 5.0 * g * std::log(static_cast<double>(std::max<Eigen::Index>(n, 2)));
  return dm;
}

DistortedMetric estimate_distorted_metric(const SiteData& data, const SiteBinning& bins,
                                          int theta, double f, double g) {
  if (theta < 0 || theta >= static_cast<int>(bins.bins.size())) {
    throw InvalidArgument("component index out of range");
  }
  const auto& sites = bins.bins[theta];
  if (sites.empty()) throw EmptyBin(theta);
  const std::span<const int> subset(sites);
  const Eigen::MatrixXd q = q_hat_matrix(data, subset);
  DistortedMetric dm = distorted_metric_from_q(q, f, g);
  const Eigen::MatrixXd m2 = product_second_moments(data, subset);
  const double root_k = std::sqrt(static_cast<double>(sites.size()));
  dm.se.resize(q.rows(), q.cols());
  for (Eigen::Index a = 0; a < q.rows(); ++a) {
    for (Eigen::Index b = 0; b < q.cols(); ++b) {
      const double sd = std::sqrt(std::max(0.0, m2(a, b) - q(a, b) * q(a, b)));
      dm.se(a, b) = a == b ? 0.0 : q(a, b) > 0.0 ? sd / (root_k * q(a, b)) : kInf;
    }
  }
  return dm;
}

DistortionReport check_distortion(const DistortedMetric& dm, const Phylogeny& tree) {
  if (dm.n() != tree.n()) throw InvalidArgument("metric and tree sizes differ");
  const Eigen::MatrixXd truth = tree.distance_matrix();
  DistortionReport report;
  const double bound = dm.psi + dm.tau;
  for (int a = 0; a < dm.n(); ++a) {
    for (int b = a + 1; b < dm.n(); ++b) {
      const double t = truth(a, b);
      const double e = dm.d(a, b);
      if ((t < bound || e < bound) && !(std::abs(t - e) < dm.tau)) {
        report.violations.emplace_back(a + 1, b + 1);
      }
    }
  }
  return report;
}

namespace {

struct Rep {
  int leaf;
  double height;
};

struct Cluster {
  int vertex;
  std::vector<Rep> reps;
};

class CherryPicker {
 public:
  CherryPicker(const DistortedMetric& dm, double f, const ReconstructOptions& options)
      : d_(dm.d), options_(options) {
    radius_ = std::isnan(options.reliable_radius) ? dm.psi + dm.tau
                                                  : options.reliable_radius;
    const int n = static_cast<int>(d_.rows());
    reliable_.resize(static_cast<std::size_t>(n) * n);
    const bool use_se = dm.se.size() != 0 && options.noise_budget > 0.0;
    const double max_se = options.noise_budget * f;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        bool ok = d_(a, b) < radius_;
        if (use_se && a != b) ok = ok && dm.se(a, b) <= max_se;
        reliable_[static_cast<std::size_t>(a) * n + b] = ok;
      }
    }
  }

  Phylogeny run(ReconstructStats* stats) {
    const int n = static_cast<int>(d_.rows());
    for (int a = 0; a < n; ++a) clusters_.push_back({a, {{a, 0.0}}});
    next_vertex_ = n;
    while (clusters_.size() > 3) merge_step(stats);
    finish();
    return Phylogeny(n, std::move(edges_));
  }

 private:
  bool reliable(int a, int b) const {
    return reliable_[static_cast<std::size_t>(a) * d_.rows() + b] != 0;
  }

  // Averaged root-to-root distance of two subtrees.
  double root_distance(const Cluster& x, const Cluster& y) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& rx : x.reps) {
      for (const auto& ry : y.reps) {
        if (!reliable(rx.leaf, ry.leaf)) continue;
        sum += d_(rx.leaf, ry.leaf) - rx.height - ry.height;
        ++count;
      }
    }
    return count ? sum / count : kInf;
  }

  // Four-point support for the split xy|uw: min of the two other pairings
  // minus the xy+uw pairing, averaged over representative choices. NaN when
  // no choice has all six entries reliable.
  double support(const Cluster& x, const Cluster& y, const Cluster& u,
                 const Cluster& w) const {
    double s12 = 0.0, s13 = 0.0, s14 = 0.0;
    int count = 0;
    for (const auto& a : x.reps) {
      for (const auto& b : y.reps) {
        if (!reliable(a.leaf, b.leaf)) continue;
        for (const auto& c : u.reps) {
          if (!reliable(a.leaf, c.leaf) || !reliable(b.leaf, c.leaf)) continue;
          for (const auto& e : w.reps) {
            if (!reliable(a.leaf, e.leaf) || !reliable(b.leaf, e.leaf) ||
                !reliable(c.leaf, e.leaf)) {
              continue;
            }
            s12 += d_(a.leaf, b.leaf) + d_(c.leaf, e.leaf);
            s13 += d_(a.leaf, c.leaf) + d_(b.leaf, e.leaf);
            s14 += d_(a.leaf, e.leaf) + d_(b.leaf, c.leaf);
            ++count;
          }
        }
      }
    }
    if (count == 0) return std::numeric_limits<double>::quiet_NaN();
    return (std::min(s13, s14) - s12) / count;
  }

  struct Verdict {
    int tested = 0;
    int failed = 0;
    double worst = kInf;
  };

  Verdict test_cherry(std::size_t i, std::size_t j, const Eigen::MatrixXd& root_d,
                      bool exhaustive) const {
    std::vector<std::size_t> witnesses;
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      if (c == i || c == j) continue;
      if (std::isfinite(root_d(i, c)) || std::isfinite(root_d(j, c))) {
        witnesses.push_back(c);
      }
    }
    Verdict v;
    for (std::size_t x = 0; x < witnesses.size(); ++x) {
      for (std::size_t y = x + 1; y < witnesses.size(); ++y) {
        const double s = support(clusters_[i], clusters_[j], clusters_[witnesses[x]],
                                 clusters_[witnesses[y]]);
        if (std::isnan(s)) continue;
        ++v.tested;
        v.worst = std::min(v.worst, s);
        if (!(s > 0.0)) {
          ++v.failed;
          if (!exhaustive) return v;
        }
      }
    }
    return v;
  }

  void merge_step(ReconstructStats* stats) {
    const std::size_t m = clusters_.size();
    Eigen::MatrixXd root_d(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      root_d(i, i) = 0.0;
      for (std::size_t j = i + 1; j < m; ++j) {
        root_d(i, j) = root_d(j, i) = root_distance(clusters_[i], clusters_[j]);
      }
    }
    struct Candidate {
      double score;
      std::size_t i, j;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (std::isfinite(root_d(i, j))) candidates.push_back({root_d(i, j), i, j});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
      if (x.score != y.score) return x.score < y.score;
      return std::tie(x.i, x.j) < std::tie(y.i, y.j);
    });
    for (const auto& c : candidates) {
      const Verdict v = test_cherry(c.i, c.j, root_d, false);
      if (v.tested > 0 && v.failed == 0) {
        merge(c.i, c.j, root_d);
        return;
      }
    }
    if (!options_.fallback) {
      throw InconsistentMetric("no pair of subtrees passes the cherry test (" +
                               std::to_string(m) + " subtrees left)");
    }
    // Most plausible pair: fewest failed tests relative to tests run, then the
    // strongest worst-case support.
    const Candidate* best = nullptr;
    double best_rate = kInf;
    double best_worst = -kInf;
    for (const auto& c : candidates) {
      const Verdict v = test_cherry(c.i, c.j, root_d, true);
      if (v.tested == 0) continue;
      const double rate = static_cast<double>(v.failed) / v.tested;
      if (rate < best_rate || (rate == best_rate && v.worst > best_worst)) {
        best = &c;
        best_rate = rate;
        best_worst = v.worst;
      }
    }
    if (best == nullptr) {
      if (candidates.empty()) {
        throw InconsistentMetric("no pair of subtrees has a finite distance");
      }
      best = &candidates.front();
    }
    if (stats) ++stats->forced_merges;
    merge(best->i, best->j, root_d);
  }

  // Length of the edge from subtree i to its parent when merged with j.
  double arm_length(std::size_t i, std::size_t j, const Eigen::MatrixXd& root_d) const {
    double sum = 0.0;
    int count = 0;
    for (std::size_t x = 0; x < clusters_.size(); ++x) {
      if (x == i || x == j) continue;
      if (!std::isfinite(root_d(i, x)) || !std::isfinite(root_d(j, x))) continue;
      sum += 0.5 * (root_d(i, j) + root_d(i, x) - root_d(j, x));
      ++count;
    }
    return count ? sum / count : 0.5 * root_d(i, j);
  }

  static double clamp_weight(double w, double fallback) {
    if (!std::isfinite(w)) return fallback;
    return std::max(w, kMinWeight);
  }

  void merge(std::size_t i, std::size_t j, const Eigen::MatrixXd& root_d) {
    const double dij = root_d(i, j);
    const double len_i = std::clamp(arm_length(i, j, root_d), 0.0, std::max(dij, 0.0));
    const double len_j = std::max(dij - len_i, 0.0);
    const int v = next_vertex_++;
    edges_.push_back({v, clusters_[i].vertex, clamp_weight(len_i, kMinWeight)});
    edges_.push_back({v, clusters_[j].vertex, clamp_weight(len_j, kMinWeight)});
    Cluster merged{v, {}};
    for (const auto& r : clusters_[i].reps) merged.reps.push_back({r.leaf, r.height + len_i});
    for (const auto& r : clusters_[j].reps) merged.reps.push_back({r.leaf, r.height + len_j});
    std::stable_sort(merged.reps.begin(), merged.reps.end(),
                     [](const Rep& x, const Rep& y) { return x.height < y.height; });
    if (static_cast<int>(merged.reps.size()) > options_.representatives) {
      merged.reps.resize(std::max(1, options_.representatives));
    }
    clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(j));
    clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(i));
    clusters_.push_back(std::move(merged));
  }

  void finish() {
    if (clusters_.size() == 2) {
      const double w = root_distance(clusters_[0], clusters_[1]);
      edges_.push_back({clusters_[0].vertex, clusters_[1].vertex, clamp_weight(w, 1.0)});
      return;
    }
    const int v = next_vertex_++;
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t j = (i + 1) % 3;
      const std::size_t k = (i + 2) % 3;
      const double w = 0.5 * (root_distance(clusters_[i], clusters_[j]) +
                              root_distance(clusters_[i], clusters_[k]) -
                              root_distance(clusters_[j], clusters_[k]));
      edges_.push_back({v, clusters_[i].vertex, clamp_weight(w, kMinWeight)});
    }
  }

  const Eigen::MatrixXd& d_;
  ReconstructOptions options_;
  double radius_ = kInf;
  std::vector<char> reliable_;
  std::vector<Cluster> clusters_;
  std::vector<TreeEdge> edges_;
  int next_vertex_ = 0;
};

}  // namespace

Phylogeny reconstruct_topology(const DistortedMetric& dm, double f, double g,
                               const ReconstructOptions& options,
                               ReconstructStats* stats) {
  dm.validate();
  if (dm.n() < 2) throw InvalidArgument("need at least two leaves");
  if (!(f > 0.0) || !(g >= f)) throw InvalidArgument("weight bounds must satisfy 0 < f <= g");
  const bool within_contract =
      dm.tau <= f / 5.0 + 1e-15 && dm.psi >= 5.0 * g * std::log(static_cast<double>(dm.n()));
  if (stats) stats->contract_warning = !within_contract;
  CherryPicker picker(dm, f, options);
  return picker.run(stats);
}

std::vector<Phylogeny> reconstruct_all(const SiteData& data, const SiteBinning& bins,
                                       const AlgoConfig& cfg,
                                       const ReconstructOptions& options,
                                       std::vector<ReconstructStats>* stats) {
  const std::size_t theta = bins.bins.size();
  for (std::size_t t = 0; t < theta; ++t) {
    if (bins.bins[t].empty()) throw EmptyBin(t);
  }
  std::vector<Phylogeny> out(theta);
  std::vector<ReconstructStats> local(theta);
  parallel_for(0, theta, [&](std::size_t t) {
    const DistortedMetric dm =
        estimate_distorted_metric(data, bins, static_cast<int>(t), cfg.f, cfg.g);
    out[t] = reconstruct_topology(dm, cfg.f, cfg.g, options, &local[t]);
  });
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace phylomix
