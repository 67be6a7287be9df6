#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/gtr_model.hpp"
#include "phylomix/phylogeny.hpp"
#include "phylomix/simulate.hpp"

namespace phylomix::testing {

// ((1:p,2:p):m,(3:p,4:p)) unrooted: leaves 0..3, internal 4 and 5.
inline Phylogeny quartet(double pendant, double middle) {
  return Phylogeny(4, {{0, 4, pendant}, {1, 4, pendant}, {2, 5, pendant}, {3, 5, pendant},
                       {4, 5, middle}});
}

// Binary-symmetric site data from explicit sigma columns (+1 -> state 1).
inline SiteData binary_data(const std::vector<std::vector<int>>& columns) {
  const int n = static_cast<int>(columns.size());
  const int k = static_cast<int>(columns.front().size());
  std::vector<std::uint8_t> states(static_cast<std::size_t>(k) * n);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < k; ++i) states[i * n + a] = columns[a][i] > 0 ? 0 : 1;
  }
  return SiteData(k, n, RateMatrix::binary_symmetric(), std::move(states));
}

inline Eigen::MatrixXd exp_neg(const Eigen::MatrixXd& d) { return (-d.array()).exp().matrix(); }

}  // namespace phylomix::testing
