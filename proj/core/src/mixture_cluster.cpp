#include "phylomix/mixture_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phylomix/errors.hpp"
#include "phylomix/estimators.hpp"
#include "phylomix/parallel.hpp"

namespace phylomix {

void AlgoConfig::validate() const {
  if (!(f > 0.0) || !(g >= f) || !std::isfinite(g)) {
    throw InvalidArgument("weight bounds must satisfy 0 < f <= g");
  }
  if (theta_count < 1) throw InvalidArgument("theta must be at least 1");
  if (!(nu_min > 0.0) || nu_min > 1.0 / theta_count + 1e-12) {
    throw InvalidArgument("nu_min must lie in (0, 1/theta]");
  }
  if (!(sparsify_coefficient >= 0.0)) {
    throw InvalidArgument("sparsification coefficient must be non-negative");
  }
  if (!(r_hat_margin >= 0.0)) throw InvalidArgument("r_hat margin must be non-negative");
  if (!(r_hat_z >= 0.0)) throw InvalidArgument("r_hat z threshold must be non-negative");
  if (!(separation_factor > 0.0)) throw InvalidArgument("separation factor must be positive");
  if (min_cluster_size < 1) throw InvalidArgument("minimum cluster size must be at least 1");
}

DerivedConstants derive_constants(const AlgoConfig& cfg, int n) {
  cfg.validate();
  if (n < 4) throw InvalidArgument("the clustering step needs n >= 4");
  DerivedConstants dc;
  const double base = cfg.nu_min * std::exp(-4.0 * cfg.g);
  // With theta = 1 and nu_min = 1 the formula divides by zero; the radius is
  // then unbounded.
  const double denom = 3.0 * cfg.theta_count * (1.0 - cfg.nu_min);
  dc.c_c = denom > 0.0 ? -std::log(base / denom) : std::numeric_limits<double>::infinity();
  dc.omega = 2.0 / 3.0 * base;
  dc.c_delta = 0.5 * std::exp(-dc.c_c);
  dc.p_sp = std::min(1.0, cfg.sparsify_coefficient * std::log(static_cast<double>(n)) / n);
  if (!cfg.sparsify) dc.p_sp = 1.0;
  return dc;
}

PairSet find_quasicherries(const Eigen::MatrixXd& q_hat_all, const DerivedConstants& dc) {
  std::vector<LeafPair> out;
  const int n = static_cast<int>(q_hat_all.rows());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (q_hat_all(a, b) >= dc.omega) out.emplace_back(a + 1, b + 1);
    }
  }
  return PairSet(std::move(out));
}

PairSet find_quasicherries(const SiteData& data, const DerivedConstants& dc) {
  return find_quasicherries(q_hat_matrix(data), dc);
}

PairSet sparsify(const PairSet& pairs, const DerivedConstants& dc, Rng& rng) {
  if (dc.p_sp >= 1.0) return pairs;
  std::bernoulli_distribution keep(std::max(0.0, dc.p_sp));
  std::vector<LeafPair> out;
  for (const auto& p : pairs) {
    if (keep(rng)) out.push_back(p);
  }
  return PairSet(std::move(out));
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int size) : parent(size) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(int x, int y) {
    x = find(x);
    y = find(y);
    if (x != y) parent[std::max(x, y)] = std::min(x, y);
  }
};

}  // namespace

bool separated(const LeafPair& c1, const LeafPair& c2, const Eigen::MatrixXd& q_hat_all,
               double threshold) {
  if (c1.a == c2.a || c1.a == c2.b || c1.b == c2.a || c1.b == c2.b) return false;
  for (int x : {c1.a, c1.b}) {
    for (int y : {c2.a, c2.b}) {
      if (q_hat_all(x - 1, y - 1) >= threshold) return false;
    }
  }
  return true;
}

ClusterResult infer_clusters(const Eigen::MatrixXd& r, const PairSet& pairs,
                             const AlgoConfig& cfg, const Eigen::MatrixXd& q_hat_all,
                             double omega, int k) {
  const int m = static_cast<int>(pairs.size());
  if (r.rows() != m || r.cols() != m) throw InvalidArgument("r_hat matrix size mismatch");
  if (cfg.r_hat_z > 0.0 && k < 1) throw InvalidArgument("site count must be positive");
  const double sep = cfg.separation_factor * omega;
  DisjointSets sets(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (!(r(i, j) > cfg.r_hat_margin)) continue;
      if (cfg.r_hat_z > 0.0 &&
          !(r(i, j) > cfg.r_hat_z * std::sqrt(std::max(0.0, r(i, i) * r(j, j)) / k))) {
        continue;
      }
      if (cfg.require_separated && !separated(pairs[i], pairs[j], q_hat_all, sep)) {
        continue;
      }
      sets.join(i, j);
    }
  }
  std::vector<std::vector<int>> members(m);
  for (int i = 0; i < m; ++i) members[sets.find(i)].push_back(i);
  std::vector<std::vector<int>> classes;
  for (auto& c : members) {
    if (!c.empty()) classes.push_back(std::move(c));
  }
  // Members are in pair order, so front() is the smallest pair.
  std::stable_sort(classes.begin(), classes.end(), [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return x.size() > y.size();
    return x.front() < y.front();
  });
  ClusterResult result;
  for (const auto& c : classes) {
    if (static_cast<int>(c.size()) < cfg.min_cluster_size) {
      result.unattached += c.size();
      continue;
    }
    std::vector<LeafPair> ps;
    for (int i : c) ps.push_back(pairs[i]);
    result.clusters.emplace_back(std::move(ps));
    for (std::size_t x = 0; x < c.size(); ++x) {
      for (std::size_t y = x + 1; y < c.size(); ++y) {
        if (r(c[x], c[y]) < -cfg.r_hat_margin) ++result.negative_edges_within;
      }
    }
  }
  if (result.clusters.empty() && cfg.discover_theta) return result;
  if (!cfg.discover_theta && static_cast<int>(result.clusters.size()) != cfg.theta_count) {
    throw ComponentCountMismatch(cfg.theta_count, result.clusters.size());
  }
  return result;
}

ClusterResult infer_clusters(const SiteData& data, const PairSet& pairs,
                             const AlgoConfig& cfg) {
  if (pairs.empty()) {
    if (!cfg.discover_theta) throw ComponentCountMismatch(cfg.theta_count, 0);
    return {};
  }
  const DerivedConstants dc = derive_constants(cfg, data.n());
  const Eigen::MatrixXd q = cfg.require_separated ? q_hat_matrix(data) : Eigen::MatrixXd();
  return infer_clusters(r_hat_matrix(data, pairs), pairs, cfg, q, dc.omega, data.k());
}

Eigen::MatrixXd clustering_statistic_table(const SiteData& data,
                                           const std::vector<PairSet>& clusters) {
  Eigen::MatrixXd table(data.k(), static_cast<Eigen::Index>(clusters.size()));
  for (std::size_t t = 0; t < clusters.size(); ++t) {
    if (clusters[t].empty()) throw InvalidArgument("empty cluster pair set");
    const auto col = clustering_statistics(data, clusters[t]);
    for (int i = 0; i < data.k(); ++i) table(i, static_cast<Eigen::Index>(t)) = col[i];
  }
  return table;
}

SiteBinning bin_sites(const Eigen::MatrixXd& stats, const DerivedConstants& dc) {
  const Eigen::Index k = stats.rows();
  const Eigen::Index theta = stats.cols();
  if (theta == 0) throw InvalidArgument("binning needs at least one cluster");
  SiteBinning out;
  out.bins.resize(theta);
  for (Eigen::Index i = 0; i < k; ++i) {
    int hits = 0;
    Eigen::Index hit = 0;
    Eigen::Index best = 0;
    for (Eigen::Index t = 0; t < theta; ++t) {
      if (stats(i, t) > dc.c_delta) {
        ++hits;
        hit = t;
      }
      if (stats(i, t) > stats(i, best)) best = t;
    }
    if (hits == 1) {
      out.bins[hit].push_back(static_cast<int>(i));
    } else {
      out.bins[best].push_back(static_cast<int>(i));
      ++out.ambiguity_count;
    }
  }
  return out;
}

SiteBinning bin_sites(const SiteData& data, const std::vector<PairSet>& clusters,
                      const DerivedConstants& dc) {
  return bin_sites(clustering_statistic_table(data, clusters), dc);
}

std::optional<SiteBinning> refine_binning(const SiteData& data, const SiteBinning& bins) {
  const Eigen::Index n = data.n();
  const std::size_t theta = bins.bins.size();
  if (theta < 2) return std::nullopt;
  std::vector<Eigen::MatrixXd> precision(theta);
  std::vector<double> offset(theta);
  for (std::size_t t = 0; t < theta; ++t) {
    const auto& b = bins.bins[t];
    if (static_cast<Eigen::Index>(b.size()) <= n) return std::nullopt;
    const Eigen::MatrixXd cov = q_hat_matrix(data, std::span<const int>(b));
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return std::nullopt;
    precision[t] = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double prior = static_cast<double>(b.size()) / data.k();
    offset[t] = std::log(prior) - 0.5 * log_det;
  }
  const auto& s = data.sigma_matrix();
  const int k = data.k();
  std::vector<int> label(k);
  constexpr int kBlock = 4096;
  const std::size_t blocks = (static_cast<std::size_t>(k) + kBlock - 1) / kBlock;
  parallel_for(0, blocks, [&](std::size_t blk) {
    const Eigen::Index lo = static_cast<Eigen::Index>(blk) * kBlock;
    const Eigen::Index rows = std::min<Eigen::Index>(kBlock, k - lo);
    const auto block = s.middleRows(lo, rows);
    Eigen::MatrixXd score(rows, static_cast<Eigen::Index>(theta));
    for (std::size_t t = 0; t < theta; ++t) {
      const Eigen::MatrixXd a = block * precision[t];
      score.col(static_cast<Eigen::Index>(t)) =
          (-0.5 * (a.array() * block.array()).rowwise().sum()).matrix() +
          Eigen::VectorXd::Constant(rows, offset[t]);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index best = 0;
      score.row(i).maxCoeff(&best);
      label[lo + i] = static_cast<int>(best);
    }
  });
  SiteBinning out;
  out.bins.resize(theta);
  for (int i = 0; i < k; ++i) out.bins[label[i]].push_back(i);
  out.ambiguity_count = bins.ambiguity_count;
  return out;
}

PipelineResult run_pipeline(const SiteData& data, const AlgoConfig& cfg) {
  if (data.has_hidden()) {
    throw InvalidArgument("the reconstruction pipeline only accepts stripped site data");
  }
  PipelineResult out;
  auto& diag = out.diagnostics;
  diag.n = data.n();
  diag.k = data.k();
  diag.constants = derive_constants(cfg, data.n());
  const auto& dc = diag.constants;

  const Eigen::MatrixXd q_all = q_hat_matrix(data);
  const PairSet found = find_quasicherries(q_all, dc);
  diag.quasicherry_count = found.size();
  if (found.empty()) throw NoQuasicherries();

  Rng rng(substream_seed(cfg.seed, 0x5ba75ULL));
  const PairSet kept = sparsify(found, dc, rng);
  diag.sparsified_count = kept.size();
  if (kept.empty()) throw NoQuasicherries();
  out.candidates = kept;

  if (cfg.theta_count == 1 && !cfg.discover_theta) {
    // A single component needs no splitting; the covariance signs carry no
    // information here.
    out.clusters = {kept};
  } else {
    out.r_hat = r_hat_matrix(data, kept);
    auto clusters = infer_clusters(out.r_hat, kept, cfg, q_all, dc.omega, data.k());
    out.clusters = std::move(clusters.clusters);
    diag.negative_edges_within = clusters.negative_edges_within;
    diag.unattached = clusters.unattached;
  }
  diag.theta_found = static_cast<int>(out.clusters.size());
  for (const auto& c : out.clusters) diag.cluster_sizes.push_back(c.size());

  out.statistics = clustering_statistic_table(data, out.clusters);
  out.binning = bin_sites(out.statistics, dc);
  diag.ambiguity_count = out.binning.ambiguity_count;
  if (cfg.refine_bins) {
    if (auto refined = refine_binning(data, out.binning)) {
      std::vector<int> before(data.k());
      for (std::size_t t = 0; t < out.binning.bins.size(); ++t) {
        for (int i : out.binning.bins[t]) before[i] = static_cast<int>(t);
      }
      for (std::size_t t = 0; t < refined->bins.size(); ++t) {
        for (int i : refined->bins[t]) diag.refine_moved += before[i] != static_cast<int>(t);
      }
      out.binning = std::move(*refined);
      diag.refined = true;
    }
  }
  for (std::size_t t = 0; t < out.binning.bins.size(); ++t) {
    diag.bin_sizes.push_back(out.binning.bins[t].size());
    if (out.binning.bins[t].empty()) throw EmptyBin(t);
  }
  return out;
}

}  // namespace phylomix
