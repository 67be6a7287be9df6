#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "phylomix/errors.hpp"
#include "phylomix/gtr_model.hpp"
#include "phylomix/harness/oracles.hpp"

namespace phylomix {
namespace {

Eigen::MatrixXd jc_rates(double off) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(4, 4, off);
  q.diagonal().setConstant(-3.0 * off);
  return q;
}

Eigen::VectorXd uniform(int r) { return Eigen::VectorXd::Constant(r, 1.0 / r); }

bool mentions(const GtrValidation& v, const std::string& word) {
  for (const auto& s : v.violations) {
    if (s.find(word) != std::string::npos) return true;
  }
  return false;
}

TEST(ValidateGtr, AcceptsJukesCantor) {
  EXPECT_TRUE(validate_gtr(jc_rates(0.25), uniform(4)).ok());
}

TEST(ValidateGtr, FlagsRowSum) {
  Eigen::MatrixXd q = jc_rates(0.25);
  q(0, 0) += 0.1;
  const auto v = validate_gtr(q, uniform(4));
  EXPECT_FALSE(v.ok());
  EXPECT_TRUE(mentions(v, "row sum"));
}

TEST(ValidateGtr, FlagsPositivity) {
  Eigen::MatrixXd q = jc_rates(0.25);
  q(0, 1) = 0.0;
  q(0, 0) = -0.5;
  const auto v = validate_gtr(q, uniform(4));
  EXPECT_FALSE(v.ok());
  EXPECT_TRUE(mentions(v, "positivity"));
}

TEST(ValidateGtr, FlagsDetailedBalance) {
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 1, -1;
  Eigen::VectorXd pi(2);
  pi << 0.3, 0.7;
  EXPECT_TRUE(mentions(validate_gtr(q, pi), "detailed balance"));
}

TEST(ValidateGtr, ShapeAndFinitenessErrors) {
  EXPECT_THROW(validate_gtr(Eigen::MatrixXd::Zero(3, 2), uniform(3)), InvalidArgument);
  EXPECT_THROW(validate_gtr(jc_rates(0.25), uniform(3)), InvalidArgument);
  Eigen::MatrixXd q = jc_rates(0.25);
  q(1, 2) = std::nan("");
  EXPECT_THROW(validate_gtr(q, uniform(4)), InvalidArgument);
  EXPECT_THROW(RateMatrix(Eigen::MatrixXd::Zero(4, 4), uniform(4)), ValidationError);
}

TEST(NormalizeRateMatrix, BinarySymmetricAnyBeta) {
  for (double beta : {0.1, 1.0, 7.5}) {
    Eigen::MatrixXd q(2, 2);
    q << -beta, beta, beta, -beta;
    const RateMatrix rm = normalize_rate_matrix(q, uniform(2));
    EXPECT_NEAR(rm.q()(0, 1), 0.5, 1e-12);
    EXPECT_NEAR(rm.q()(0, 0), -0.5, 1e-12);
    EXPECT_NEAR(rm.z()(0), 1.0, 1e-12);
    EXPECT_NEAR(rm.z()(1), -1.0, 1e-12);
    EXPECT_NEAR(rm.lambda()(1), -1.0, 1e-12);
  }
}

TEST(NormalizeRateMatrix, JukesCantorTieBreak) {
  const RateMatrix rm = normalize_rate_matrix(jc_rates(2.0), uniform(4));
  EXPECT_NEAR(rm.q()(0, 1), 0.25, 1e-12);
  EXPECT_NEAR(rm.q()(0, 0), -0.75, 1e-12);
  const Eigen::VectorXd& z = rm.z();
  EXPECT_LT((rm.q() * z + z).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR((rm.pi().array() * z.array().square()).sum(), 1.0, 1e-12);
  EXPECT_GT(z(0), 0.0);
  // Deterministic: the same input gives the same vector.
  const RateMatrix again = normalize_rate_matrix(jc_rates(2.0), uniform(4));
  EXPECT_EQ(z, again.z());
}

TEST(NormalizeRateMatrix, IdempotentAndScaleInvariant) {
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto raw = harness::oracle::random_gtr(2 + i % 4, rng);
    const RateMatrix a(raw.q, raw.pi);
    const RateMatrix b(a.q(), a.pi());
    const RateMatrix c(3.7 * raw.q, raw.pi);
    EXPECT_LT((a.q() - b.q()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a.q() - c.q()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a.z() - c.z()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR((a.pi().array() * a.z().array()).sum(), 0.0, 1e-12);
  }
}

TEST(TransitionMatrix, ZeroIsIdentity) {
  const RateMatrix rm = RateMatrix::jukes_cantor();
  EXPECT_LT((rm.transition(0.0) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionMatrix, BinaryClosedFormAgainstTaylor) {
  const RateMatrix rm = RateMatrix::binary_symmetric();
  const double w = std::log(2.0);
  const Eigen::MatrixXd m = transition_matrix(rm, w);
  EXPECT_NEAR(m(0, 1), 0.25, 1e-12);
  EXPECT_NEAR(m(1, 0), 0.25, 1e-12);
  EXPECT_LT((m - harness::oracle::taylor_expm(w * rm.q())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionMatrix, StochasticSemigroupSpectrum) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto raw = harness::oracle::random_gtr(2 + i % 4, rng);
    const RateMatrix rm(raw.q, raw.pi);
    const Eigen::MatrixXd m1 = rm.transition(0.3);
    const Eigen::MatrixXd m2 = rm.transition(1.1);
    EXPECT_LT((m1.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(m1.minCoeff(), 0.0);
    EXPECT_LE(m1.maxCoeff(), 1.0);
    EXPECT_LT((rm.transition(1.4) - m1 * m2).cwiseAbs().maxCoeff(), 1e-10);
    // Eigenvalues of M(w) against exp(w lambda), via the symmetric conjugate.
    const Eigen::VectorXd s = rm.pi().cwiseSqrt();
    Eigen::MatrixXd sym = s.asDiagonal() * m2 * s.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
    Eigen::VectorXd got = es.eigenvalues().reverse();
    Eigen::VectorXd want = (1.1 * rm.lambda().array()).exp();
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TransitionMatrix, RejectsBadLengths) {
  const RateMatrix rm = RateMatrix::binary_symmetric();
  EXPECT_THROW(rm.transition(-0.1), InvalidArgument);
  EXPECT_THROW(rm.transition(INFINITY), InvalidArgument);
}

TEST(SigmaMap, Lookups) {
  // The tie-break picks one admissible z for Jukes-Cantor; compare against it.
  const RateMatrix jc = RateMatrix::jukes_cantor();
  const std::vector<int> states{1, 2, 3, 4};
  const auto s = sigma_map(states, jc);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s[i], jc.z()(i));
  const auto b = sigma_map(std::vector<int>{1, 1, 2}, RateMatrix::binary_symmetric());
  EXPECT_EQ(b, (std::vector<double>{1.0, 1.0, -1.0}));
  EXPECT_TRUE(sigma_map(std::vector<int>{}, jc).empty());
  EXPECT_THROW(sigma_map(std::vector<int>{5}, jc), InvalidArgument);
  EXPECT_THROW(sigma_map(std::vector<int>{0}, jc), InvalidArgument);
}

TEST(RateMatrixFile, RoundTripAndErrors) {
  const RateMatrix jc = RateMatrix::jukes_cantor();
  const RateMatrix back = parse_rate_matrix(format_rate_matrix(jc));
  EXPECT_LT((back.q() - jc.q()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(parse_rate_matrix("2\n0.5 0.5\n-1 1\n"), ParseError);
  EXPECT_THROW(parse_rate_matrix("1\n1\n0\n"), ParseError);
  EXPECT_THROW(RateMatrix::preset("nope"), InvalidArgument);
  EXPECT_EQ(resolve_rate_matrix("binary-symmetric").r(), 2);
}

}  // namespace
}  // namespace phylomix
