#include "phylomix/estimators.hpp"

#include <algorithm>

#include "phylomix/errors.hpp"
#include "phylomix/parallel.hpp"

namespace phylomix {

namespace {

// Fixed row-block size for the blocked products. Block results are combined
// in block order, so the rounding does not depend on the thread count.
constexpr int kSiteBlock = 4096;

std::vector<int> all_sites(int k) {
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = i;
  return out;
}

std::span<const int> resolve(const SiteData& data, SiteSubset sites,
                             std::vector<int>& storage) {
  if (sites) {
    if (sites->empty()) throw InvalidArgument("site subset is empty");
    for (int i : *sites) {
      if (i < 0 || i >= data.k()) throw InvalidArgument("site index out of range");
    }
    return *sites;
  }
  if (data.k() == 0) throw InvalidArgument("site data has no sites");
  storage = all_sites(data.k());
  return storage;
}

void check_label(const SiteData& data, int a) {
  if (a < 1 || a > data.n()) throw InvalidArgument("leaf label out of range");
}

// Sums block_result(b) over the fixed blocks of `sites`, in block order.
template <typename BlockFn>
Eigen::MatrixXd blocked_sum(std::span<const int> sites, Eigen::Index rows,
                            Eigen::Index cols, BlockFn block_result) {
  const std::size_t blocks = (sites.size() + kSiteBlock - 1) / kSiteBlock;
  std::vector<Eigen::MatrixXd> partial(blocks);
  parallel_for(0, blocks, [&](std::size_t b) {
    const std::size_t lo = b * kSiteBlock;
    const std::size_t hi = std::min(sites.size(), lo + kSiteBlock);
    partial[b] = block_result(sites.subspan(lo, hi - lo));
  });
  // Pairwise combination in a fixed shape.
  for (std::size_t step = 1; step < blocks; step *= 2) {
    for (std::size_t b = 0; b + step < blocks; b += 2 * step) {
      partial[b] += partial[b + step];
      partial[b + step].resize(0, 0);
    }
  }
  if (partial.empty()) return Eigen::MatrixXd::Zero(rows, cols);
  return std::move(partial[0]);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double q_hat(const SiteData& data, int a, int b, SiteSubset sites) {
  check_label(data, a);
  check_label(data, b);
  if (a == b) throw InvalidArgument("q_hat needs two distinct leaves");
  std::vector<int> storage;
  const auto idx = resolve(data, sites, storage);
  const auto& s = data.sigma_matrix();
  std::vector<double> prod(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    prod[j] = s(idx[j], a - 1) * s(idx[j], b - 1);
  }
  return pairwise_sum(prod) / static_cast<double>(idx.size());
}

Eigen::MatrixXd q_hat_matrix(const SiteData& data, SiteSubset sites) {
  std::vector<int> storage;
  const auto idx = resolve(data, sites, storage);
  const auto& s = data.sigma_matrix();
  const Eigen::Index n = data.n();
  Eigen::MatrixXd total = blocked_sum(idx, n, n, [&](std::span<const int> block) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(block.size()), n);
    for (std::size_t j = 0; j < block.size(); ++j) rows.row(j) = s.row(block[j]);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
    return g;
  });
  Eigen::MatrixXd full = total.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(idx.size());
}

Eigen::MatrixXd product_second_moments(const SiteData& data, SiteSubset sites) {
  std::vector<int> storage;
  const auto idx = resolve(data, sites, storage);
  const auto& s = data.sigma_matrix();
  const Eigen::Index n = data.n();
  Eigen::MatrixXd total = blocked_sum(idx, n, n, [&](std::span<const int> block) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(block.size()), n);
    for (std::size_t j = 0; j < block.size(); ++j) {
      rows.row(j) = s.row(block[j]).array().square().matrix();
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
    return g;
  });
  Eigen::MatrixXd full = total.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(idx.size());
}

double r_hat(const SiteData& data, const LeafPair& c1, const LeafPair& c2,
             SiteSubset sites) {
  if (c1 == c2) throw InvalidArgument("r_hat needs two different pairs");
  for (int l : {c1.a, c1.b, c2.a, c2.b}) check_label(data, l);
  std::vector<int> storage;
  const auto idx = resolve(data, sites, storage);
  const auto& s = data.sigma_matrix();
  std::vector<double> p1(idx.size()), p2(idx.size()), p12(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const int i = idx[j];
    p1[j] = s(i, c1.a - 1) * s(i, c1.b - 1);
    p2[j] = s(i, c2.a - 1) * s(i, c2.b - 1);
    p12[j] = p1[j] * p2[j];
  }
  const double m = static_cast<double>(idx.size());
  return pairwise_sum(p12) / m - (pairwise_sum(p1) / m) * (pairwise_sum(p2) / m);
}

Eigen::MatrixXd r_hat_matrix(const SiteData& data, const PairSet& pairs,
                             SiteSubset sites) {
  std::vector<int> storage;
  const auto idx = resolve(data, sites, storage);
  const auto& s = data.sigma_matrix();
  const Eigen::Index m = static_cast<Eigen::Index>(pairs.size());
  for (const auto& p : pairs) {
    check_label(data, p.a);
    check_label(data, p.b);
  }
  // Column m carries the plain products so that the first moments come out of
  // the same blocked reduction.
  Eigen::MatrixXd total = blocked_sum(idx, m + 1, m + 1, [&](std::span<const int> block) {
    const Eigen::Index rows = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXd prod(rows, m + 1);
    for (Eigen::Index c = 0; c < m; ++c) {
      const int a = pairs[c].a - 1;
      const int b = pairs[c].b - 1;
      for (Eigen::Index j = 0; j < rows; ++j) {
        prod(j, c) = s(block[j], a) * s(block[j], b);
      }
    }
    prod.col(m).setOnes();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m + 1, m + 1);
    g.selfadjointView<Eigen::Lower>().rankUpdate(prod.transpose());
    return g;
  });
  const double count = static_cast<double>(idx.size());
  Eigen::MatrixXd moments = total.selfadjointView<Eigen::Lower>();
  moments /= count;
  const Eigen::VectorXd first = moments.col(m).head(m);
  Eigen::MatrixXd r = moments.topLeftCorner(m, m) - first * first.transpose();
  return r;
}

double clustering_statistic(const SiteData& data, const PairSet& pairs, int site) {
  if (pairs.empty()) throw InvalidArgument("clustering statistic needs a nonempty pair set");
  if (site < 0 || site >= data.k()) throw InvalidArgument("site index out of range");
  const auto& s = data.sigma_matrix();
  std::vector<double> prod;
  prod.reserve(pairs.size());
  for (const auto& p : pairs) prod.push_back(s(site, p.a - 1) * s(site, p.b - 1));
  return pairwise_sum(prod) / static_cast<double>(pairs.size());
}

std::vector<double> clustering_statistics(const SiteData& data, const PairSet& pairs) {
  if (pairs.empty()) throw InvalidArgument("clustering statistic needs a nonempty pair set");
  for (const auto& p : pairs) {
    check_label(data, p.a);
    check_label(data, p.b);
  }
  std::vector<double> out(data.k());
  parallel_for(0, static_cast<std::size_t>(data.k()), [&](std::size_t i) {
    out[i] = clustering_statistic(data, pairs, static_cast<int>(i));
  });
  return out;
}

}  // namespace phylomix
