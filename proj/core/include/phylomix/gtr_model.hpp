#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace phylomix {

// Result of checking a candidate GTR generator. Each entry of `violations`
// is a short human-readable description of one broken condition.
struct GtrValidation {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline constexpr double kGtrTolerance = 1e-10;

GtrValidation validate_gtr(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi,
                           double tol = kGtrTolerance);

// A validated, normalized general time-reversible rate matrix.
//
// The generator is scaled so that its second largest eigenvalue is -1. The
// spectrum is obtained from the symmetric conjugate
// S = diag(pi)^{1/2} Q diag(pi)^{-1/2}, whose orthonormal eigenvectors are
// kept around so that exp(wQ) can be evaluated without a general solver.
class RateMatrix {
 public:
  // Validates, normalizes and diagonalizes (q, pi). Throws ValidationError
  // when the pair is not a GTR generator.
  RateMatrix(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi);

  static RateMatrix binary_symmetric();
  static RateMatrix jukes_cantor();
  // Known names: "binary-symmetric", "jukes-cantor".
  static RateMatrix preset(std::string_view name);

  int r() const { return static_cast<int>(pi_.size()); }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::VectorXd& pi() const { return pi_; }
  // Descending: lambda(0) == 0, lambda(1) == -1.
  const Eigen::VectorXd& lambda() const { return lambda_; }
  // Right eigenvector for lambda(1), with sum_x pi_x z_x^2 == 1 and the first
  // nonzero entry positive.
  const Eigen::VectorXd& z() const { return z_; }
  double z_max() const { return z_.cwiseAbs().maxCoeff(); }

  // exp(w Q). Throws InvalidArgument for negative or non-finite w.
  Eigen::MatrixXd transition(double w) const;

 private:
  Eigen::MatrixXd q_;
  Eigen::VectorXd pi_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd z_;
  // Orthonormal eigenbasis of the symmetric conjugate, columns ordered as
  // lambda_.
  Eigen::MatrixXd basis_;
  Eigen::VectorXd sqrt_pi_;
};

// Equivalent to RateMatrix(q, pi); spelled as a function for symmetry with
// validate_gtr.
RateMatrix normalize_rate_matrix(const Eigen::MatrixXd& q,
                                 const Eigen::VectorXd& pi);

inline Eigen::MatrixXd transition_matrix(const RateMatrix& rm, double w) {
  return rm.transition(w);
}

// Componentwise lookup sigma_j = z[states_j]. States are 1-based.
std::vector<double> sigma_map(std::span<const int> states, const RateMatrix& rm);

// Plain-text rate matrix file: "r", then pi, then the r rows of Q.
RateMatrix parse_rate_matrix(std::string_view text);
RateMatrix load_rate_matrix(const std::filesystem::path& path);
std::string format_rate_matrix(const RateMatrix& rm);

// A preset name or a path to a rate matrix file.
RateMatrix resolve_rate_matrix(const std::string& preset_or_path);

}  // namespace phylomix
