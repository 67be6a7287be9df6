#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "phylomix/errors.hpp"
#include "phylomix/harness/evaluation.hpp"
#include "phylomix/harness/experiment.hpp"
#include "phylomix/harness/oracles.hpp"
#include "phylomix/treebuild.hpp"

namespace phylomix {
namespace {

namespace oracle = harness::oracle;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kF = 0.05, kG = 0.2;

DistortedMetric exact_metric(const Phylogeny& t) {
  return distorted_metric_from_q(testing::exp_neg(t.distance_matrix()), kF, kG);
}

TEST(DistortedMetricFromQ, Transform) {
  Eigen::MatrixXd q(3, 3);
  q << 1, std::exp(-1.0), -0.02, std::exp(-1.0), 1, 0.5, -0.02, 0.5, 1;
  const DistortedMetric dm = distorted_metric_from_q(q, kF, kG);
  EXPECT_NEAR(dm.d(0, 1), 1.0, 1e-12);
  EXPECT_EQ(dm.d(0, 2), kInf);
  EXPECT_EQ(dm.d(1, 1), 0.0);
  EXPECT_NEAR(dm.tau, kF / 5, 1e-15);
  EXPECT_NEAR(dm.psi, 5 * kG * std::log(3.0), 1e-12);
  EXPECT_NO_THROW(dm.validate());
  DistortedMetric bad = dm;
  bad.d(0, 1) = 0.3;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(CheckDistortion, Examples) {
  Rng rng(2);
  const Phylogeny t = random_phylogeny(12, kF, kG, rng);
  DistortedMetric dm = exact_metric(t);
  EXPECT_TRUE(check_distortion(dm, t).ok());
  dm.d(2, 5) = dm.d(5, 2) = dm.d(2, 5) + 2 * dm.tau;
  const auto report = check_distortion(dm, t);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0], LeafPair(3, 6));
  // Long entries at +infinity are fine.
  DistortedMetric far = exact_metric(t);
  dm.psi = 0.3;
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 12; ++b) {
      if (a != b && far.d(a, b) >= 0.3 + far.tau) far.d(a, b) = kInf;
    }
  }
  far.psi = 0.3;
  EXPECT_TRUE(check_distortion(far, t).ok());
}

TEST(ReconstructTopology, QuartetSplit) {
  const Phylogeny t = testing::quartet(0.1, 0.05);
  const Phylogeny got = reconstruct_topology(exact_metric(t), kF, kG);
  EXPECT_EQ(oracle::quartet_split(got, 1, 2, 3, 4), 0);
  const Phylogeny swapped = reconstruct_topology(
      exact_metric(t.relabeled(std::vector<int>{1, 3, 2, 4})), kF, kG);
  EXPECT_EQ(oracle::quartet_split(swapped, 1, 2, 3, 4), 1);
}

TEST(ReconstructTopology, AllSevenLeafTopologiesMatchOracles) {
  const auto all = oracle::enumerate_topologies(7);
  ASSERT_EQ(all.size(), oracle::topology_count(7));
  Rng rng(3);
  std::uniform_real_distribution<double> w(kF, kG);
  for (const auto& topo : all) {
    std::vector<double> weights(topo.edges().size());
    for (double& x : weights) x = w(rng);
    const Phylogeny t = topo.with_weights(weights);
    const Phylogeny got = reconstruct_topology(exact_metric(t), kF, kG);
    ASSERT_TRUE(oracle::same_topology(got, t));
    EXPECT_EQ(got.n(), 7);
  }
}

TEST(ReconstructTopology, MaxAgreementOracleAtSixLeaves) {
  const auto all = oracle::enumerate_topologies(6);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Phylogeny t = random_phylogeny(6, kF, kG, rng);
    const DistortedMetric dm = exact_metric(t);
    const Phylogeny got = reconstruct_topology(dm, kF, kG);
    EXPECT_TRUE(oracle::same_topology(all[oracle::max_agreement(dm.d, all)], got));
  }
}

TEST(ReconstructTopology, AdversarialNoiseAtSixtyFourLeaves) {
  Rng rng(5);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 10; ++rep) {
    const Phylogeny t = random_phylogeny(64, kF, kG, rng);
    DistortedMetric dm = exact_metric(t);
    const double eps = dm.tau * (1 - 1e-6);
    for (int a = 0; a < 64; ++a) {
      for (int b = a + 1; b < 64; ++b) {
        double v = dm.d(a, b);
        v = v >= dm.psi + dm.tau ? kInf : std::max(0.0, v + (coin(rng) ? eps : -eps));
        dm.d(a, b) = dm.d(b, a) = v;
      }
    }
    ASSERT_TRUE(check_distortion(dm, t).ok());
    const Phylogeny got = reconstruct_topology(dm, kF, kG);
    EXPECT_EQ(rf_distance(got, t), 0);
    // Fresh noise gives the same answer.
    DistortedMetric again = exact_metric(t);
    for (int a = 0; a < 64; ++a) {
      for (int b = a + 1; b < 64; ++b) {
        double v = again.d(a, b);
        v = v >= again.psi + again.tau ? kInf : v + (coin(rng) ? 0.5 : -0.5) * again.tau;
        again.d(a, b) = again.d(b, a) = std::max(0.0, v);
      }
    }
    EXPECT_EQ(rf_distance(reconstruct_topology(again, kF, kG), got), 0);
  }
}

TEST(ReconstructTopology, InconsistentMetric) {
  // Every pair at +infinity except one: no cherry can be verified.
  DistortedMetric dm;
  dm.d = Eigen::MatrixXd::Constant(6, 6, kInf);
  dm.d.diagonal().setZero();
  dm.d(0, 1) = dm.d(1, 0) = 0.1;
  dm.tau = kF / 5;
  dm.psi = 1.0;
  EXPECT_THROW(reconstruct_topology(dm, kF, kG), InconsistentMetric);
}

TEST(EstimateDistortedMetric, SimulatedSingleComponent) {
  harness::ExperimentSpec spec;
  spec.theta_count = 1;
  spec.n = 64;
  spec.k = 200000;
  spec.seed = 6;
  const harness::Simulation sim = harness::simulate_trial(spec, 0);
  SiteBinning bins;
  bins.bins.resize(1);
  for (int i = 0; i < spec.k; ++i) bins.bins[0].push_back(i);
  const DistortedMetric dm = estimate_distorted_metric(sim.data, bins, 0, kF, kG);
  const Eigen::MatrixXd truth = sim.model.components[0].distance_matrix();
  // At desk-scale k only short pairs have a standard error well below tau;
  // the contract is checked on those.
  int close = 0, good = 0;
  for (int a = 0; a < 64; ++a) {
    for (int b = a + 1; b < 64; ++b) {
      if (truth(a, b) > dm.psi + dm.tau || dm.se(a, b) > dm.tau / 3) continue;
      ++close;
      good += std::abs(dm.d(a, b) - truth(a, b)) < dm.tau;
    }
  }
  ASSERT_GE(close, 64);
  EXPECT_GE(static_cast<double>(good) / close, 0.99);
  EXPECT_EQ(dm.se.rows(), 64);

  const auto trees = reconstruct_all(sim.data, bins, spec.algo_config());
  EXPECT_EQ(rf_distance(trees[0], sim.model.components[0]), 0);
  SiteBinning empty;
  empty.bins.resize(1);
  EXPECT_THROW(estimate_distorted_metric(sim.data, empty, 0, kF, kG), EmptyBin);
  EXPECT_THROW(reconstruct_all(sim.data, empty, spec.algo_config()), EmptyBin);
}

}  // namespace
}  // namespace phylomix
