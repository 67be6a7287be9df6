#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "phylomix/errors.hpp"
#include "phylomix/estimators.hpp"
#include "phylomix/harness/evaluation.hpp"
#include "phylomix/harness/experiment.hpp"
#include "phylomix/mixture_cluster.hpp"

namespace phylomix {
namespace {

AlgoConfig plain_config(int theta) {
  AlgoConfig cfg;
  cfg.theta_count = theta;
  cfg.nu_min = 1.0 / theta;
  cfg.r_hat_z = 0.0;
  cfg.require_separated = false;
  cfg.min_cluster_size = 1;
  return cfg;
}

TEST(DeriveConstants, ClosedForms) {
  AlgoConfig cfg;
  const DerivedConstants dc = derive_constants(cfg, 128);
  EXPECT_NEAR(dc.c_c, 0.8 + std::log(6.0), 1e-12);
  EXPECT_NEAR(dc.c_c, 2.59176, 1e-5);
  EXPECT_NEAR(dc.omega, std::exp(-0.8) / 3, 1e-12);
  EXPECT_NEAR(dc.omega, 0.1497763214, 1e-9);
  EXPECT_NEAR(dc.c_delta, std::exp(-0.8) / 12, 1e-12);
  EXPECT_NEAR(dc.c_delta, 0.0374440803, 1e-9);
  EXPECT_NEAR(dc.p_sp, 8 * std::log(128.0) / 128, 1e-12);
  EXPECT_LT(dc.omega, 0.5 * std::exp(-0.8));
  EXPECT_GT(dc.c_c, 0.8);
  EXPECT_EQ(derive_constants(cfg, 4).p_sp, 1.0);
  EXPECT_THROW(derive_constants(cfg, 3), InvalidArgument);
}

TEST(AlgoConfigValidate, Ranges) {
  AlgoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.nu_min = 0.6;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = AlgoConfig();
  cfg.g = 0.01;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = AlgoConfig();
  cfg.r_hat_margin = -1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(FindQuasicherries, Threshold) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
  q(0, 1) = q(1, 0) = 0.30;
  q(0, 2) = q(2, 0) = 0.05;
  const DerivedConstants dc = derive_constants(AlgoConfig(), 4);
  EXPECT_EQ(find_quasicherries(q, dc), PairSet({LeafPair(1, 2)}));
  EXPECT_TRUE(find_quasicherries(Eigen::MatrixXd::Zero(4, 4), dc).empty());
}

TEST(FindQuasicherries, SandwichedBetweenTrueSets) {
  harness::ExperimentSpec spec;
  spec.seed = 5;
  const harness::Simulation sim = harness::simulate_trial(spec, 0);
  const DerivedConstants dc = derive_constants(spec.algo_config(), spec.n);
  const PairSet found = find_quasicherries(strip_labels(sim.data), dc);
  for (const auto& tree : sim.model.components) {
    for (const auto& p : upsilon_alpha(tree, 4 * spec.g)) EXPECT_TRUE(found.contains(p));
  }
  for (const auto& p : found) {
    double best = INFINITY;
    for (const auto& tree : sim.model.components) best = std::min(best, tree.distance(p.a, p.b));
    EXPECT_LE(best, dc.c_c);
  }
}

TEST(Sparsify, ExtremesAndBinomialMean) {
  std::vector<LeafPair> v;
  for (int a = 1; a <= 30; ++a) v.emplace_back(a, a + 1);
  const PairSet ps(v);
  DerivedConstants dc;
  Rng rng(1);
  dc.p_sp = 1.0;
  EXPECT_EQ(sparsify(ps, dc, rng), ps);
  dc.p_sp = 0.0;
  EXPECT_TRUE(sparsify(ps, dc, rng).empty());
  dc.p_sp = 0.3;
  double total = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) total += sparsify(ps, dc, rng).size();
  const double mean = 30 * 0.3;
  EXPECT_NEAR(total / trials, mean, 3 * std::sqrt(mean * 0.7 / trials));
}

TEST(InferClusters, SignPattern) {
  const PairSet ps({LeafPair(1, 2), LeafPair(3, 4), LeafPair(5, 6)});
  Eigen::MatrixXd r(3, 3);
  r << 0.1, 0.05, -0.04, 0.05, 0.1, -0.05, -0.04, -0.05, 0.1;
  const ClusterResult res = infer_clusters(r, ps, plain_config(2), {}, 0.15, 1000);
  ASSERT_EQ(res.clusters.size(), 2u);
  EXPECT_EQ(res.clusters[0], PairSet({LeafPair(1, 2), LeafPair(3, 4)}));
  EXPECT_EQ(res.clusters[1], PairSet({LeafPair(5, 6)}));
  EXPECT_EQ(res.negative_edges_within, 0);
}

TEST(InferClusters, ClosureOverridesNegativeEdge) {
  const PairSet ps({LeafPair(1, 2), LeafPair(3, 4), LeafPair(5, 6)});
  Eigen::MatrixXd r(3, 3);
  r << 0.1, 0.05, -0.04, 0.05, 0.1, 0.05, -0.04, 0.05, 0.1;
  const ClusterResult res = infer_clusters(r, ps, plain_config(1), {}, 0.15, 1000);
  ASSERT_EQ(res.clusters.size(), 1u);
  EXPECT_EQ(res.clusters[0].size(), 3u);
  EXPECT_EQ(res.negative_edges_within, 1);
}

TEST(InferClusters, CountMismatchAndDiscovery) {
  const PairSet ps({LeafPair(1, 2), LeafPair(3, 4), LeafPair(5, 6)});
  const Eigen::MatrixXd r = -Eigen::MatrixXd::Ones(3, 3);
  try {
    infer_clusters(r, ps, plain_config(2), {}, 0.15, 1000);
    FAIL();
  } catch (const ComponentCountMismatch& e) {
    EXPECT_EQ(e.found(), 3u);
    EXPECT_EQ(e.expected(), 2u);
  }
  AlgoConfig cfg = plain_config(2);
  cfg.discover_theta = true;
  EXPECT_EQ(infer_clusters(r, ps, cfg, {}, 0.15, 1000).clusters.size(), 3u);
}

TEST(InferClusters, FiltersAndUnattached) {
  const PairSet ps({LeafPair(1, 2), LeafPair(2, 3), LeafPair(5, 6), LeafPair(7, 8)});
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(4, 4, 0.05);
  r.diagonal().setConstant(1.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(8, 8);
  q(0, 6) = q(6, 0) = 0.2;  // leaf 1 close to leaf 7
  AlgoConfig cfg = plain_config(1);
  cfg.require_separated = true;
  cfg.min_cluster_size = 2;
  cfg.discover_theta = true;
  // (1,2)-(2,3) share a leaf, (1,2)-(7,8) are too close; the rest link.
  const ClusterResult res = infer_clusters(r, ps, cfg, q, 0.15, 1000000);
  ASSERT_EQ(res.clusters.size(), 1u);
  EXPECT_EQ(res.clusters[0].size(), 4u);
  EXPECT_TRUE(separated(ps[1], ps[2], q, 0.075));
  EXPECT_FALSE(separated(ps[0], ps[1], q, 0.075));
  EXPECT_FALSE(separated(ps[0], ps[3], q, 0.075));
  // A z-test at k = 100 rejects 0.05 against sd 0.1.
  cfg.r_hat_z = 5.0;
  const ClusterResult none = infer_clusters(r, ps, cfg, q, 0.15, 100);
  EXPECT_TRUE(none.clusters.empty());
  EXPECT_EQ(none.unattached, 4u);
}

TEST(BinSites, ThresholdAndTieRule) {
  const DerivedConstants dc = derive_constants(AlgoConfig(), 128);
  Eigen::MatrixXd u(3, 2);
  u << 0.10, 0.01, 0.04, 0.05, 0.0, -0.1;
  const SiteBinning b = bin_sites(u, dc);
  EXPECT_EQ(b.bins[0], (std::vector<int>{0, 2}));
  EXPECT_EQ(b.bins[1], (std::vector<int>{1}));
  EXPECT_EQ(b.ambiguity_count, 2);
  EXPECT_TRUE(b.unassigned.empty());
  const SiteData d = testing::binary_data({{1, -1}, {1, 1}});
  EXPECT_THROW(bin_sites(d, {PairSet()}, dc), InvalidArgument);
}

TEST(RunPipeline, ThetaOneAndRefusesHiddenLabels) {
  harness::ExperimentSpec spec;
  spec.theta_count = 1;
  spec.n = 32;
  spec.k = 5000;
  const harness::Simulation sim = harness::simulate_trial(spec, 0);
  EXPECT_THROW(run_pipeline(sim.data, spec.algo_config()), InvalidArgument);
  const PipelineResult res = run_pipeline(strip_labels(sim.data), spec.algo_config());
  ASSERT_EQ(res.binning.bins.size(), 1u);
  EXPECT_EQ(res.binning.bins[0].size(), 5000u);
  EXPECT_EQ(res.clusters.size(), 1u);
}

TEST(RunPipeline, NoQuasicherries) {
  // Independent leaves: nothing correlates.
  std::vector<std::vector<int>> cols(6, std::vector<int>(400));
  Rng rng(3);
  std::bernoulli_distribution coin(0.5);
  for (auto& c : cols) {
    for (int& x : c) x = coin(rng) ? 1 : -1;
  }
  AlgoConfig cfg;
  EXPECT_THROW(run_pipeline(testing::binary_data(cols), cfg), NoQuasicherries);
}

TEST(RunPipeline, RecoversPartitionAndIsDeterministic) {
  harness::ExperimentSpec spec;
  spec.seed = 77;
  const harness::Simulation sim = harness::simulate_trial(spec, 0);
  const SiteData data = strip_labels(sim.data);
  const AlgoConfig cfg = spec.algo_config();
  const PipelineResult a = run_pipeline(data, cfg);
  // Every cluster is pure: its pairs are close in one tree only.
  std::vector<int> owner_of_cluster;
  for (const auto& c : a.clusters) {
    std::vector<int> votes(2, 0);
    for (const auto& p : c) {
      const double d0 = sim.model.components[0].distance(p.a, p.b);
      const double d1 = sim.model.components[1].distance(p.a, p.b);
      ++votes[d0 < d1 ? 0 : 1];
    }
    EXPECT_TRUE(votes[0] == 0 || votes[1] == 0);
    owner_of_cluster.push_back(votes[0] > 0 ? 0 : 1);
  }
  EXPECT_NE(owner_of_cluster[0], owner_of_cluster[1]);
  EXPECT_GE(harness::best_binning_accuracy(a.binning, *sim.data.hidden()), 0.99);
  // Bins are disjoint and cover every site.
  std::vector<int> seen(data.k(), 0);
  for (const auto& b : a.binning.bins) {
    for (int i : b) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);

  ::setenv("PHYLOMIX_THREADS", "2", 1);
  const PipelineResult b = run_pipeline(data, cfg);
  ::unsetenv("PHYLOMIX_THREADS");
  EXPECT_EQ(a.binning.bins, b.binning.bins);
  EXPECT_EQ(a.clusters, b.clusters);
}

TEST(RunPipeline, LabelPermutationEquivariance) {
  // Sparsification draws in pair order, so the property is checked with it off.
  harness::ExperimentSpec spec;
  spec.seed = 78;
  spec.k = 50000;
  spec.sparsify = false;
  const harness::Simulation sim = harness::simulate_trial(spec, 0);
  const SiteData data = strip_labels(sim.data);
  const AlgoConfig cfg = spec.algo_config();
  Rng rng(4);
  const std::vector<int> perm = random_labeling(spec.n, rng);
  const PipelineResult a = run_pipeline(data, cfg);
  const PipelineResult b = run_pipeline(data.relabeled(perm), cfg);
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  // Equal-size classes may swap order once the labels change.
  for (std::size_t t = 0; t < a.clusters.size(); ++t) {
    std::vector<LeafPair> mapped;
    for (const auto& p : a.clusters[t]) mapped.emplace_back(perm[p.a - 1], perm[p.b - 1]);
    std::size_t match = b.clusters.size();
    for (std::size_t u = 0; u < b.clusters.size(); ++u) {
      if (b.clusters[u] == PairSet(mapped)) match = u;
    }
    ASSERT_LT(match, b.clusters.size());
    EXPECT_EQ(a.binning.bins[t], b.binning.bins[match]);
  }
}

}  // namespace
}  // namespace phylomix
