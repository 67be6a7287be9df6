#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/phylogeny.hpp"
#include "phylomix/simulate.hpp"

namespace phylomix {

// Optional restriction of a reduction to a subset of site indices; an empty
// optional means all k sites.
using SiteSubset = std::optional<std::span<const int>>;

// Sum with a fixed pairwise (tree) shape, independent of threading.
double pairwise_sum(std::span<const double> values);

// Mean of sigma_a * sigma_b over the sites.
double q_hat(const SiteData& data, int a, int b, SiteSubset sites = std::nullopt);

// All pairs at once, as an n x n symmetric matrix indexed by label - 1 (the
// diagonal holds the mean of sigma_a^2).
Eigen::MatrixXd q_hat_matrix(const SiteData& data, SiteSubset sites = std::nullopt);

// Mean of (sigma_a sigma_b)^2 for every leaf pair, indexed like q_hat_matrix.
Eigen::MatrixXd product_second_moments(const SiteData& data, SiteSubset sites = std::nullopt);

// mean(sigma_a1 sigma_b1 sigma_a2 sigma_b2) - q_hat(c1) q_hat(c2).
double r_hat(const SiteData& data, const LeafPair& c1, const LeafPair& c2,
             SiteSubset sites = std::nullopt);

// r_hat for every pair of entries of `pairs`, as an m x m matrix.
Eigen::MatrixXd r_hat_matrix(const SiteData& data, const PairSet& pairs,
                             SiteSubset sites = std::nullopt);

// Mean of sigma_a^i sigma_b^i over the pair set at one site.
double clustering_statistic(const SiteData& data, const PairSet& pairs, int site);
// The same statistic for every site.
std::vector<double> clustering_statistics(const SiteData& data, const PairSet& pairs);

}  // namespace phylomix
