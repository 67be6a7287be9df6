#include "phylomix/simulate.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "phylomix/errors.hpp"
#include "phylomix/parallel.hpp"

namespace phylomix {

namespace {

constexpr std::string_view kStateAlphabet =
    "123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

int draw(const double* cdf, int r, double u) {
  for (int j = 0; j < r - 1; ++j) {
    if (u < cdf[j]) return j;
  }
  return r - 1;
}

}  // namespace

SiteData::SiteData(int k, int n, const RateMatrix& rm,
                   std::vector<std::uint8_t> states_zero_based,
                   std::optional<std::vector<int>> hidden)
    : k_(k), n_(n), r_(rm.r()), states_(std::move(states_zero_based)), z_(rm.z()),
      hidden_(std::move(hidden)) {
  if (k < 0 || n < 1) throw InvalidArgument("site data needs k >= 0 and n >= 1");
  if (states_.size() != static_cast<std::size_t>(k) * n) {
    throw InvalidArgument("state matrix has the wrong size");
  }
  if (hidden_ && hidden_->size() != static_cast<std::size_t>(k)) {
    throw InvalidArgument("hidden component vector has the wrong length");
  }
  sigma_.resize(k, n);
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < n; ++a) {
      const int s = states_[static_cast<std::size_t>(i) * n + a];
      if (s >= r_) throw InvalidArgument("state outside the alphabet");
      sigma_(i, a) = z_(s);
    }
  }
}

std::vector<int> SiteData::sites_of(int component) const {
  if (!hidden_) throw InvalidArgument("site data carries no hidden components");
  std::vector<int> out;
  for (int i = 0; i < k_; ++i) {
    if ((*hidden_)[i] == component) out.push_back(i);
  }
  return out;
}

SiteData SiteData::without_hidden() const {
  SiteData out = *this;
  out.hidden_.reset();
  return out;
}

SiteData SiteData::relabeled(const std::vector<int>& new_label) const {
  if (static_cast<int>(new_label.size()) != n_) {
    throw InvalidArgument("relabeling has the wrong length");
  }
  std::vector<std::uint8_t> states(states_.size());
  for (int i = 0; i < k_; ++i) {
    for (int a = 0; a < n_; ++a) {
      states[static_cast<std::size_t>(i) * n_ + (new_label[a] - 1)] =
          states_[static_cast<std::size_t>(i) * n_ + a];
    }
  }
  SiteData out = *this;
  out.states_ = std::move(states);
  for (int a = 0; a < n_; ++a) out.sigma_.col(new_label[a] - 1) = sigma_.col(a);
  return out;
}

SiteSampler::SiteSampler(const Phylogeny& tree, const RateMatrix& rm, int root)
    : n_(tree.n()), r_(rm.r()) {
  root_ = root >= 0 ? root : (tree.vertex_count() > n_ ? n_ : 0);
  if (root_ >= tree.vertex_count()) throw InvalidArgument("root vertex out of range");
  root_cdf_.resize(r_);
  double acc = 0.0;
  for (int x = 0; x < r_; ++x) root_cdf_[x] = acc += rm.pi()(x);
  edge_cdf_.resize(tree.edges().size());
  for (std::size_t e = 0; e < tree.edges().size(); ++e) {
    const Eigen::MatrixXd m = rm.transition(tree.edges()[e].w);
    auto& cdf = edge_cdf_[e];
    cdf.resize(static_cast<std::size_t>(r_) * r_);
    for (int x = 0; x < r_; ++x) {
      double run = 0.0;
      for (int y = 0; y < r_; ++y) cdf[x * r_ + y] = run += m(x, y);
    }
  }
  std::vector<int> stack{root_};
  std::vector<char> seen(tree.vertex_count(), 0);
  seen[root_] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& nb : tree.neighbors(v)) {
      if (seen[nb.vertex]) continue;
      seen[nb.vertex] = 1;
      steps_.push_back({v, nb.vertex, nb.edge});
      stack.push_back(nb.vertex);
    }
  }
}

void SiteSampler::sample_into(Rng& rng, std::uint8_t* out) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  thread_local std::vector<int> state;
  state.assign(steps_.size() + 1, 0);
  state[root_] = draw(root_cdf_.data(), r_, unif(rng));
  for (const auto& st : steps_) {
    const double* cdf = edge_cdf_[st.edge].data() + state[st.parent] * r_;
    state[st.child] = draw(cdf, r_, unif(rng));
  }
  for (int a = 0; a < n_; ++a) out[a] = static_cast<std::uint8_t>(state[a]);
}

std::vector<int> SiteSampler::sample(Rng& rng) const {
  std::vector<std::uint8_t> raw(n_);
  sample_into(rng, raw.data());
  std::vector<int> out(raw.begin(), raw.end());
  for (int& s : out) ++s;
  return out;
}

std::vector<int> sample_site(const Phylogeny& tree, const RateMatrix& rm, Rng& rng,
                             int root) {
  return SiteSampler(tree, rm, root).sample(rng);
}

SiteData sample_mixture(const MixtureModel& mix, int k, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("need at least one site");
  mix.validate();
  const int n = mix.n();
  std::vector<SiteSampler> samplers;
  for (const auto& t : mix.components) samplers.emplace_back(t, mix.rm);
  std::vector<double> nu_cdf;
  double acc = 0.0;
  for (double v : mix.nu) nu_cdf.push_back(acc += v);

  std::vector<std::uint8_t> states(static_cast<std::size_t>(k) * n);
  std::vector<int> hidden(k);
  parallel_for(0, static_cast<std::size_t>(k), [&](std::size_t i) {
    Rng rng(substream_seed(seed, i));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int theta = draw(nu_cdf.data(), static_cast<int>(nu_cdf.size()), unif(rng));
    hidden[i] = theta;
    samplers[theta].sample_into(rng, states.data() + i * n);
  });
  return SiteData(k, n, mix.rm, std::move(states), std::move(hidden));
}

SiteData strip_labels(const SiteData& data) {
  return data.without_hidden();
}

char state_char(int state) {
  if (state < 1 || state > static_cast<int>(kStateAlphabet.size())) {
    throw InvalidArgument("state has no alignment character");
  }
  return kStateAlphabet[state - 1];
}

void write_alignment(std::ostream& out, const SiteData& data) {
  std::string row(data.k(), '?');
  for (int a = 1; a <= data.n(); ++a) {
    for (int i = 0; i < data.k(); ++i) row[i] = state_char(data.state(i, a));
    out << '>' << a << '\n' << row << '\n';
  }
}

Alignment read_alignment(std::istream& in) {
  Alignment aln;
  std::vector<std::pair<int, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;  // blank or comment
    if (line[0] == '>') {
      const std::string name = line.substr(1);
      int label = 0;
      try {
        std::size_t used = 0;
        label = std::stoi(name, &used);
        if (used != name.size()) label = 0;
      } catch (const std::exception&) {
        label = 0;
      }
      if (label < 1) throw ParseError("bad leaf label '" + name + "'", 0, line_no);
      rows.emplace_back(label, std::string());
      continue;
    }
    if (rows.empty()) throw ParseError("sequence data before the first header", 0, line_no);
    for (char c : line) {
      if (kStateAlphabet.find(c) == std::string_view::npos) {
        throw ParseError(std::string("unknown state character '") + c + "'", 0, line_no);
      }
    }
    rows.back().second += line;
  }
  if (rows.empty()) throw ParseError("alignment has no sequences", 0, line_no);
  aln.n = static_cast<int>(rows.size());
  aln.k = static_cast<int>(rows.front().second.size());
  std::vector<char> seen(aln.n, 0);
  aln.states.assign(static_cast<std::size_t>(aln.k) * aln.n, 0);
  for (const auto& [label, seq] : rows) {
    if (label > aln.n || seen[label - 1]) {
      throw ParseError("leaf labels must be exactly 1..n", 0, 0);
    }
    seen[label - 1] = 1;
    if (static_cast<int>(seq.size()) != aln.k) {
      throw ParseError("sequences have different lengths", 0, 0);
    }
    for (int i = 0; i < aln.k; ++i) {
      const int s = static_cast<int>(kStateAlphabet.find(seq[i]));
      aln.max_state = std::max(aln.max_state, s + 1);
      aln.states[static_cast<std::size_t>(i) * aln.n + (label - 1)] =
          static_cast<std::uint8_t>(s);
    }
  }
  return aln;
}

}  // namespace phylomix
