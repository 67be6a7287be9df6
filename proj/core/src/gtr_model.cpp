#include "phylomix/gtr_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "phylomix/errors.hpp"

namespace phylomix {

namespace {

std::string fmt_index(Eigen::Index x, Eigen::Index y) {
  return "(" + std::to_string(x + 1) + "," + std::to_string(y + 1) + ")";
}

void require_shape(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
  if (q.rows() != q.cols()) {
    throw InvalidArgument("rate matrix is not square");
  }
  if (q.rows() != pi.size()) {
    throw InvalidArgument("rate matrix and stationary vector sizes differ");
  }
  if (q.rows() < 2) {
    throw InvalidArgument("alphabet size must be at least 2");
  }
  if (!q.allFinite() || !pi.allFinite()) {
    throw InvalidArgument("rate matrix or stationary vector has non-finite entries");
  }
}

}  // namespace

GtrValidation validate_gtr(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi,
                           double tol) {
  require_shape(q, pi);
  GtrValidation report;
  const Eigen::Index r = q.rows();
  for (Eigen::Index x = 0; x < r; ++x) {
    for (Eigen::Index y = 0; y < r; ++y) {
      if (x != y && !(q(x, y) > 0.0)) {
        report.violations.push_back("positivity: Q" + fmt_index(x, y) + " <= 0");
      }
    }
  }
  for (Eigen::Index x = 0; x < r; ++x) {
    const double sum = q.row(x).sum();
    if (std::abs(sum) > tol) {
      std::ostringstream os;
      os << "row sum: row " << x + 1 << " sums to " << sum;
      report.violations.push_back(os.str());
    }
  }
  for (Eigen::Index x = 0; x < r; ++x) {
    if (!(pi(x) > 0.0)) {
      report.violations.push_back("stationary: pi_" + std::to_string(x + 1) +
                                  " <= 0");
    }
  }
  if (std::abs(pi.sum() - 1.0) > tol) {
    report.violations.push_back("stationary: pi does not sum to 1");
  }
  for (Eigen::Index x = 0; x < r; ++x) {
    for (Eigen::Index y = x + 1; y < r; ++y) {
      if (std::abs(pi(x) * q(x, y) - pi(y) * q(y, x)) > tol) {
        report.violations.push_back("detailed balance: pair " + fmt_index(x, y));
      }
    }
  }
  return report;
}

RateMatrix::RateMatrix(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
  const GtrValidation report = validate_gtr(q, pi);
  if (!report.ok()) {
    std::string msg = "invalid GTR rate matrix:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  const Eigen::Index r = q.rows();
  pi_ = pi;
  sqrt_pi_ = pi.cwiseSqrt();

  // S = Pi^{1/2} Q Pi^{-1/2}; symmetrize explicitly to wash out rounding in
  // user-supplied matrices.
  Eigen::MatrixXd s = sqrt_pi_.asDiagonal() * q * sqrt_pi_.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("eigendecomposition of the symmetrized generator failed");
  }
  // Eigen sorts ascending; flip to descending.
  const Eigen::VectorXd asc = solver.eigenvalues();
  const Eigen::MatrixXd asc_vecs = solver.eigenvectors();
  Eigen::VectorXd lam(r);
  Eigen::MatrixXd basis(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    lam(i) = asc(r - 1 - i);
    basis.col(i) = asc_vecs.col(r - 1 - i);
  }
  const double lambda2 = lam(1);
  if (!(lambda2 < 0.0)) {
    throw ValidationError("second eigenvalue is not negative");
  }
  const double scale = -lambda2;
  q_ = q / scale;
  lambda_ = lam / scale;
  lambda_(0) = 0.0;
  lambda_(1) = -1.0;

  // Eigenspace of lambda_2. With multiplicity > 1 the solver's basis is
  // arbitrary, so project the standard basis vectors onto the space in order
  // and keep the first one that survives.
  const double tie = 1e-9;
  Eigen::Index last = 1;
  while (last + 1 < r && std::abs(lambda_(last + 1) + 1.0) < tie) ++last;
  for (Eigen::Index i = 1; i <= last; ++i) lambda_(i) = -1.0;
  const Eigen::MatrixXd space = basis.middleCols(1, last);
  Eigen::VectorXd u;
  if (r == 2) {
    // Closed form, so binary sigma values come out as exact +-1.
    u = Eigen::Vector2d(sqrt_pi_(1), -sqrt_pi_(0));
    basis.col(1) = u;
  } else if (last == 1) {
    u = space.col(0);
  } else {
    for (Eigen::Index e = 0; e < r; ++e) {
      Eigen::VectorXd proj = space * space.row(e).transpose();
      if (proj.norm() > 1e-6) {
        u = proj.normalized();
        break;
      }
    }
    // Replace the first basis column so that transition() stays consistent.
    Eigen::MatrixXd block = space;
    block.col(0) = u;
    for (Eigen::Index c = 1; c < block.cols(); ++c) {
      Eigen::VectorXd v = block.col(c);
      for (Eigen::Index p = 0; p < c; ++p) v -= block.col(p).dot(v) * block.col(p);
      if (v.norm() < 1e-8) {
        // Degenerate after replacing; pull in another standard direction.
        for (Eigen::Index e = 0; e < r && v.norm() < 1e-8; ++e) {
          v = space * space.row(e).transpose();
          for (Eigen::Index p = 0; p < c; ++p) v -= block.col(p).dot(v) * block.col(p);
        }
      }
      block.col(c) = v.normalized();
    }
    basis.middleCols(1, last) = block;
  }
  basis_ = basis;

  // z = Pi^{-1/2} u satisfies sum pi z^2 = |u|^2 = 1.
  z_ = sqrt_pi_.cwiseInverse().cwiseProduct(u);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (std::abs(z_(i)) > 1e-12) {
      if (z_(i) < 0) {
        z_ = -z_;
        basis_.col(1) = -basis_.col(1);
      }
      break;
    }
  }
}

RateMatrix RateMatrix::binary_symmetric() {
  Eigen::MatrixXd q(2, 2);
  q << -0.5, 0.5, 0.5, -0.5;
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  return RateMatrix(q, pi);
}

RateMatrix RateMatrix::jukes_cantor() {
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(4, 4, 0.25);
  q.diagonal().setConstant(-0.75);
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(4, 0.25);
  return RateMatrix(q, pi);
}

RateMatrix RateMatrix::preset(std::string_view name) {
  if (name == "binary-symmetric") return binary_symmetric();
  if (name == "jukes-cantor") return jukes_cantor();
  throw InvalidArgument("unknown rate matrix preset: " + std::string(name));
}

Eigen::MatrixXd RateMatrix::transition(double w) const {
  if (!std::isfinite(w) || w < 0.0) {
    throw InvalidArgument("branch length must be finite and non-negative");
  }
  const Eigen::VectorXd decay = (w * lambda_).array().exp().matrix();
  const Eigen::MatrixXd sym = basis_ * decay.asDiagonal() * basis_.transpose();
  Eigen::MatrixXd m =
      sqrt_pi_.cwiseInverse().asDiagonal() * sym * sqrt_pi_.asDiagonal();
  m = m.cwiseMax(0.0).cwiseMin(1.0);
  return m;
}

RateMatrix normalize_rate_matrix(const Eigen::MatrixXd& q,
                                 const Eigen::VectorXd& pi) {
  return RateMatrix(q, pi);
}

std::vector<double> sigma_map(std::span<const int> states, const RateMatrix& rm) {
  std::vector<double> out;
  out.reserve(states.size());
  for (int s : states) {
    if (s < 1 || s > rm.r()) {
      throw InvalidArgument("state " + std::to_string(s) + " outside [1," +
                            std::to_string(rm.r()) + "]");
    }
    out.push_back(rm.z()(s - 1));
  }
  return out;
}

RateMatrix parse_rate_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        return std::istringstream(line);
      }
    }
    throw ParseError("rate matrix file ended early", 0, line_no + 1);
  };
  auto read_values = [&](Eigen::Index count) {
    auto ls = next_line();
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof() || static_cast<Eigen::Index>(vals.size()) != count) {
      throw ParseError("expected " + std::to_string(count) + " numbers", 0, line_no);
    }
    return vals;
  };
  auto header = next_line();
  int r = 0;
  if (!(header >> r) || r < 2) {
    throw ParseError("first line must hold the alphabet size r >= 2", 0, line_no);
  }
  Eigen::VectorXd pi(r);
  const auto pv = read_values(r);
  for (int i = 0; i < r; ++i) pi(i) = pv[i];
  Eigen::MatrixXd q(r, r);
  for (int x = 0; x < r; ++x) {
    const auto row = read_values(r);
    for (int y = 0; y < r; ++y) q(x, y) = row[y];
  }
  return RateMatrix(q, pi);
}

RateMatrix load_rate_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open rate matrix file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rate_matrix(buf.str());
}

std::string format_rate_matrix(const RateMatrix& rm) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << rm.r() << "\n";
  for (int i = 0; i < rm.r(); ++i) os << (i ? " " : "") << rm.pi()(i);
  os << "\n";
  for (int x = 0; x < rm.r(); ++x) {
    for (int y = 0; y < rm.r(); ++y) os << (y ? " " : "") << rm.q()(x, y);
    os << "\n";
  }
  return os.str();
}

RateMatrix resolve_rate_matrix(const std::string& preset_or_path) {
  if (preset_or_path == "binary-symmetric" || preset_or_path == "jukes-cantor") {
    return RateMatrix::preset(preset_or_path);
  }
  return load_rate_matrix(preset_or_path);
}

}  // namespace phylomix
