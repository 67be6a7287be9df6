#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "phylomix/errors.hpp"
#include "phylomix/estimators.hpp"
#include "phylomix/random_tree.hpp"
#include "phylomix/simulate.hpp"

namespace phylomix {
namespace {

MixtureModel single(const Phylogeny& t, const RateMatrix& rm) { return {{t}, {1.0}, rm}; }

TEST(SampleSite, LeafMarginalIsStationary) {
  Eigen::VectorXd pi(4);
  pi << 0.1, 0.2, 0.3, 0.4;
  Eigen::MatrixXd q(4, 4);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) q(x, y) = x == y ? 0.0 : pi(y);
  }
  for (int x = 0; x < 4; ++x) q(x, x) = -q.row(x).sum();
  const RateMatrix rm(q, pi);
  Rng tree_rng(4);
  const Phylogeny t = random_phylogeny(6, 0.05, 0.2, tree_rng);
  const SiteSampler sampler(t, rm);
  Rng rng(10);
  const int k = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < k; ++i) ++counts[sampler.sample(rng)[2] - 1];
  for (int x = 0; x < 4; ++x) {
    const double se = std::sqrt(pi(x) * (1 - pi(x)) / k);
    EXPECT_NEAR(counts[x] / static_cast<double>(k), pi(x), 3.5 * se);
  }
}

TEST(SampleSite, RootChoiceDoesNotMatter) {
  const RateMatrix rm = RateMatrix::jukes_cantor();
  Rng tree_rng(12);
  const Phylogeny t = random_phylogeny(8, 0.05, 0.2, tree_rng);
  const SiteSampler s1(t, rm, 8);
  const SiteSampler s2(t, rm, t.vertex_count() - 1);
  const int k = 100000;
  Rng r1(1), r2(2);
  // Joint distribution of leaves 1 and 5.
  std::vector<double> p1(16, 0.0), p2(16, 0.0);
  for (int i = 0; i < k; ++i) {
    const auto a = s1.sample(r1);
    const auto b = s2.sample(r2);
    p1[(a[0] - 1) * 4 + a[4] - 1] += 1.0 / k;
    p2[(b[0] - 1) * 4 + b[4] - 1] += 1.0 / k;
  }
  for (int c = 0; c < 16; ++c) {
    const double se = std::sqrt(2 * p1[c] * (1 - p1[c]) / k);
    EXPECT_NEAR(p1[c], p2[c], 4.0 * se + 1e-4);
  }
}

TEST(SampleMixture, PairCorrelationIsExpMinusD) {
  const RateMatrix rm = RateMatrix::binary_symmetric();
  Rng rng(21);
  const Phylogeny t = random_phylogeny(10, 0.05, 0.2, rng);
  const int k = 1000000;
  const SiteData data = sample_mixture(single(t, rm), k, 5);
  for (auto [a, b] : {std::pair{1, 2}, std::pair{3, 9}, std::pair{4, 7}}) {
    const double expected = std::exp(-t.distance(a, b));
    const double se = std::sqrt((1 - expected * expected) / k);
    EXPECT_NEAR(q_hat(data, a, b), expected, 3.5 * se);
  }
}

TEST(SampleMixture, ComponentSizesAndConditionalCorrelation) {
  const RateMatrix rm = RateMatrix::binary_symmetric();
  Rng rng(22);
  const MixtureModel mix =
      permutation_invariant_mixture(2, 20, 0.05, 0.2, {0.3, 0.7}, rm, rng);
  const int k = 100000;
  const SiteData data = sample_mixture(mix, k, 99);
  ASSERT_TRUE(data.has_hidden());
  for (int theta = 0; theta < 2; ++theta) {
    const auto sites = data.sites_of(theta);
    const double ratio = sites.size() / (mix.nu[theta] * k);
    EXPECT_GE(ratio, 1.0 / 1.1);
    EXPECT_LE(ratio, 1.1);
    const double expected = std::exp(-mix.components[theta].distance(1, 2));
    const double se = std::sqrt((1 - expected * expected) / sites.size());
    EXPECT_NEAR(q_hat(data, 1, 2, sites), expected, 3.5 * se);
    // Zero mean per component.
    const double mean = q_hat_matrix(data, sites)(0, 0);  // sigma^2 == 1
    EXPECT_DOUBLE_EQ(mean, 1.0);
    double s = 0.0;
    for (int i : sites) s += data.sigma(i, 3);
    EXPECT_LE(std::abs(s / sites.size()), 4.0 / std::sqrt(sites.size()));
  }
  // Mixture identity q = sum nu e^{-d}.
  const double q = 0.3 * std::exp(-mix.components[0].distance(2, 5)) +
                   0.7 * std::exp(-mix.components[1].distance(2, 5));
  EXPECT_NEAR(q_hat(data, 2, 5), q, 4.0 / std::sqrt(k));
}

TEST(SampleMixture, DeterministicAcrossThreadCounts) {
  const RateMatrix rm = RateMatrix::jukes_cantor();
  Rng rng(23);
  const MixtureModel mix = permutation_invariant_mixture(2, 12, 0.05, 0.2, {0.5, 0.5}, rm, rng);
  ::setenv("PHYLOMIX_THREADS", "1", 1);
  const SiteData a = sample_mixture(mix, 5000, 7);
  ::setenv("PHYLOMIX_THREADS", "3", 1);
  const SiteData b = sample_mixture(mix, 5000, 7);
  ::unsetenv("PHYLOMIX_THREADS");
  EXPECT_EQ(a.raw_states(), b.raw_states());
  EXPECT_EQ(*a.hidden(), *b.hidden());
  EXPECT_THROW(sample_mixture(mix, 0, 7), InvalidArgument);
}

TEST(StripLabels, RemovesOnlyHidden) {
  const RateMatrix rm = RateMatrix::binary_symmetric();
  Rng rng(24);
  const SiteData data = sample_mixture(single(random_phylogeny(5, 0.05, 0.2, rng), rm), 100, 1);
  const SiteData s = strip_labels(data);
  EXPECT_FALSE(s.has_hidden());
  EXPECT_EQ(s.raw_states(), data.raw_states());
  EXPECT_EQ(s.sigma_matrix(), data.sigma_matrix());
  EXPECT_EQ(strip_labels(s).raw_states(), s.raw_states());
  EXPECT_THROW(s.sites_of(0), InvalidArgument);
}

TEST(Alignment, RoundTripAndErrors) {
  const RateMatrix rm = RateMatrix::jukes_cantor();
  Rng rng(25);
  const SiteData data = sample_mixture(single(random_phylogeny(7, 0.05, 0.2, rng), rm), 50, 3);
  std::stringstream ss;
  ss << "; provenance line\n";
  write_alignment(ss, data);
  const Alignment aln = read_alignment(ss);
  EXPECT_EQ(aln.n, 7);
  EXPECT_EQ(aln.k, 50);
  EXPECT_EQ(aln.states, data.raw_states());

  std::istringstream bad(">1\n1234\n>2\n12*4\n");
  try {
    read_alignment(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream ragged(">1\n1234\n>2\n123\n");
  EXPECT_THROW(read_alignment(ragged), ParseError);
}

}  // namespace
}  // namespace phylomix
