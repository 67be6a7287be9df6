#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylomix/gtr_model.hpp"
#include "phylomix/phylogeny.hpp"
#include "phylomix/random_tree.hpp"

namespace phylomix {

// k sites observed at n leaves. States are stored 0-based, one byte each;
// the public accessors speak 1-based states and labels.
class SiteData {
 public:
  using SigmaMatrix = Eigen::MatrixXd;  // k x n, column a-1 holds leaf a

  SiteData() = default;
  // states: row-major k x n over 1..r.
  SiteData(int k, int n, const RateMatrix& rm, std::vector<std::uint8_t> states_zero_based,
           std::optional<std::vector<int>> hidden = std::nullopt);

  int k() const { return k_; }
  int n() const { return n_; }
  int r() const { return r_; }
  int state(int site, int label) const { return states_[index(site, label)] + 1; }
  double sigma(int site, int label) const { return sigma_(site, label - 1); }
  const SigmaMatrix& sigma_matrix() const { return sigma_; }
  const std::vector<std::uint8_t>& raw_states() const { return states_; }
  const Eigen::VectorXd& z() const { return z_; }
  double z_max() const { return z_.cwiseAbs().maxCoeff(); }

  // 0-based component index of each site, present only for simulated data.
  const std::optional<std::vector<int>>& hidden() const { return hidden_; }
  bool has_hidden() const { return hidden_.has_value(); }

  // Sites with the given hidden component (0-based). Requires hidden().
  std::vector<int> sites_of(int component) const;

  SiteData without_hidden() const;

  // Same data with columns permuted: leaf a of this data becomes leaf
  // new_label[a-1].
  SiteData relabeled(const std::vector<int>& new_label) const;

 private:
  std::size_t index(int site, int label) const {
    return static_cast<std::size_t>(site) * n_ + (label - 1);
  }

  int k_ = 0;
  int n_ = 0;
  int r_ = 0;
  std::vector<std::uint8_t> states_;
  SigmaMatrix sigma_;
  Eigen::VectorXd z_;
  std::optional<std::vector<int>> hidden_;
};

// Precomputed traversal and transition CDFs for drawing sites on one tree.
class SiteSampler {
 public:
  // root: vertex to start from; -1 selects the first internal vertex.
  SiteSampler(const Phylogeny& tree, const RateMatrix& rm, int root = -1);

  // Leaf states (1-based) ordered by label.
  std::vector<int> sample(Rng& rng) const;
  // Writes 0-based leaf states into out[0..n).
  void sample_into(Rng& rng, std::uint8_t* out) const;

 private:
  struct Step {
    int parent;
    int child;
    int edge;
  };
  int n_;
  int r_;
  int root_;
  std::vector<double> root_cdf_;
  std::vector<Step> steps_;
  // Per edge, r x r row-wise cumulative transition probabilities.
  std::vector<std::vector<double>> edge_cdf_;
};

std::vector<int> sample_site(const Phylogeny& tree, const RateMatrix& rm, Rng& rng,
                             int root = -1);

// Site i uses the stream substream_seed(seed, i): first its component, then
// its states. Results do not depend on the thread count.
SiteData sample_mixture(const MixtureModel& mix, int k, std::uint64_t seed);

SiteData strip_labels(const SiteData& data);

// FASTA-like alignment: ">label" followed by the k states of that leaf, one
// character per state from the table 1-9, A-Z, a-z. Lines starting with ';'
// are comments.
void write_alignment(std::ostream& out, const SiteData& data);
struct Alignment {
  int n = 0;
  int k = 0;
  // row-major k x n, 0-based states
  std::vector<std::uint8_t> states;
  int max_state = 0;
};
Alignment read_alignment(std::istream& in);
char state_char(int state);

}  // namespace phylomix
