#include "phylomix/random_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phylomix/errors.hpp"

namespace phylomix {

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(master) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

namespace {

std::vector<TreeEdge> uniform_topology(int n, Rng& rng) {
  // Leaves 0..n-1, internal vertices n, n+1, ...
  std::vector<TreeEdge> edges;
  edges.reserve(2 * n - 3);
  int next_internal = n;
  const int centre = next_internal++;
  for (int leaf = 0; leaf < 3; ++leaf) edges.push_back({centre, leaf, 1.0});
  for (int leaf = 3; leaf < n; ++leaf) {
    std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
    const std::size_t e = pick(rng);
    const int mid = next_internal++;
    const int far = edges[e].v;
    edges[e].v = mid;
    edges.push_back({mid, far, 1.0});
    edges.push_back({mid, leaf, 1.0});
  }
  return edges;
}

std::vector<TreeEdge> yule_topology(int n, Rng& rng) {
  // Rooted Yule growth on abstract node ids; node 0 is the root.
  std::vector<int> parent{-1, 0, 0};
  std::vector<int> tips{1, 2};
  while (static_cast<int>(tips.size()) < n) {
    std::uniform_int_distribution<std::size_t> pick(0, tips.size() - 1);
    const std::size_t i = pick(rng);
    const int split = tips[i];
    const int left = static_cast<int>(parent.size());
    parent.push_back(split);
    parent.push_back(split);
    tips[i] = left;
    tips.push_back(left + 1);
  }
  std::vector<int> id(parent.size(), -1);
  const auto labels = random_labeling(n, rng);
  for (int i = 0; i < n; ++i) id[tips[i]] = labels[i] - 1;
  int next_internal = n;
  for (std::size_t v = 1; v < parent.size(); ++v) {
    if (id[v] < 0) id[v] = next_internal++;
  }
  std::vector<TreeEdge> edges;
  // The root's two children are joined directly.
  std::vector<int> root_kids;
  for (std::size_t v = 1; v < parent.size(); ++v) {
    if (parent[v] == 0) {
      root_kids.push_back(id[v]);
    } else {
      edges.push_back({id[parent[v]], id[v], 1.0});
    }
  }
  edges.push_back({root_kids[0], root_kids[1], 1.0});
  return edges;
}

}  // namespace

Phylogeny random_phylogeny(int n, double f, double g, Rng& rng, TopologyPrior prior) {
  if (n < 3) throw InvalidArgument("random phylogenies need n >= 3");
  if (!(f > 0.0) || !(g >= f) || !std::isfinite(g)) {
    throw InvalidArgument("weight bounds must satisfy 0 < f <= g");
  }
  auto edges = prior == TopologyPrior::kUniform ? uniform_topology(n, rng)
                                                : yule_topology(n, rng);
  std::uniform_real_distribution<double> weight(f, g);
  for (auto& e : edges) e.w = f == g ? f : std::clamp(weight(rng), f, g);
  return Phylogeny(n, std::move(edges));
}

std::vector<int> random_labeling(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

void MixtureModel::validate(double nu_min) const {
  if (components.empty()) throw ValidationError("mixture has no components");
  if (nu.size() != components.size()) {
    throw ValidationError("mixture weights and components differ in count");
  }
  double total = 0.0;
  for (double v : nu) {
    if (!(v > 0.0) || v < nu_min) {
      throw ValidationError("mixture weight below the allowed minimum");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10) throw ValidationError("mixture weights must sum to 1");
  for (const auto& t : components) {
    if (t.n() != components.front().n()) {
      throw ValidationError("mixture components have different leaf counts");
    }
  }
}

MixtureModel permutation_invariant_mixture(int theta_count, int n, double f, double g,
                                           std::vector<double> nu, const RateMatrix& rm,
                                           Rng& rng, TopologyPrior prior) {
  if (theta_count < 1) throw InvalidArgument("need at least one component");
  MixtureModel mix{{}, std::move(nu), rm};
  if (static_cast<int>(mix.nu.size()) != theta_count) {
    throw InvalidArgument("nu must have one weight per component");
  }
  for (int t = 0; t < theta_count; ++t) {
    Phylogeny tree = random_phylogeny(n, f, g, rng, prior);
    mix.components.push_back(tree.relabeled(random_labeling(n, rng)));
  }
  try {
    mix.validate();
  } catch (const ValidationError& e) {
    throw InvalidArgument(e.what());
  }
  return mix;
}

}  // namespace phylomix
