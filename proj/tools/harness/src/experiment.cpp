#include "phylomix/harness/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "phylomix/errors.hpp"

namespace phylomix::harness {

std::vector<double> ExperimentSpec::mixing_weights() const {
  if (!nu.empty()) return nu;
  return std::vector<double>(std::max(theta_count, 1), 1.0 / std::max(theta_count, 1));
}

double ExperimentSpec::nu_min() const {
  const auto w = mixing_weights();
  return *std::min_element(w.begin(), w.end());
}

AlgoConfig ExperimentSpec::algo_config(int trial) const {
  AlgoConfig cfg;
  cfg.f = f;
  cfg.g = g;
  cfg.theta_count = theta_count;
  cfg.nu_min = nu_min();
  cfg.sparsify = sparsify;
  cfg.r_hat_margin = r_hat_margin;
  cfg.r_hat_z = r_hat_z;
  cfg.discover_theta = discover_theta;
  cfg.refine_bins = refine_bins;
  cfg.seed = substream_seed(seed, 0x7a1a1000ULL + static_cast<std::uint64_t>(trial));
  return cfg;
}

void ExperimentSpec::validate() const {
  if (n < 3) throw InvalidArgument("--n must be at least 3");
  if (k < 1) throw InvalidArgument("--k must be positive");
  if (theta_count < 1) throw InvalidArgument("--theta must be at least 1");
  if (trials < 1) throw InvalidArgument("--trials must be positive");
  if (!(f > 0.0) || !(g >= f) || !std::isfinite(g)) {
    throw InvalidArgument("--f and --g must satisfy 0 < f <= g");
  }
  if (!nu.empty()) {
    if (static_cast<int>(nu.size()) != theta_count) {
      throw InvalidArgument("--nu needs exactly theta weights");
    }
    double total = 0.0;
    for (double w : nu) {
      if (!(w > 0.0)) throw InvalidArgument("--nu weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("--nu weights must sum to 1");
  }
  if (!(r_hat_margin >= 0.0)) throw InvalidArgument("--r-hat-margin must be non-negative");
  if (!(r_hat_z >= 0.0)) throw InvalidArgument("--r-hat-z must be non-negative");
}

nlohmann::json to_json(const ExperimentSpec& s) {
  return {
      {"n", s.n},
      {"k", s.k},
      {"theta", s.theta_count},
      {"f", s.f},
      {"g", s.g},
      {"nu", s.mixing_weights()},
      {"rate_matrix", s.rate_matrix},
      {"trials", s.trials},
      {"seed", s.seed},
      {"sparsify", s.sparsify},
      {"r_hat_margin", s.r_hat_margin},
      {"r_hat_z", s.r_hat_z},
      {"discover_theta", s.discover_theta},
      {"refine_bins", s.refine_bins},
  };
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.n = j.value("n", s.n);
  s.k = j.value("k", s.k);
  s.theta_count = j.value("theta", s.theta_count);
  s.f = j.value("f", s.f);
  s.g = j.value("g", s.g);
  s.nu = j.value("nu", s.nu);
  s.rate_matrix = j.value("rate_matrix", s.rate_matrix);
  s.trials = j.value("trials", s.trials);
  s.seed = j.value("seed", s.seed);
  s.sparsify = j.value("sparsify", s.sparsify);
  s.r_hat_margin = j.value("r_hat_margin", s.r_hat_margin);
  s.r_hat_z = j.value("r_hat_z", s.r_hat_z);
  s.discover_theta = j.value("discover_theta", s.discover_theta);
  s.refine_bins = j.value("refine_bins", s.refine_bins);
  return s;
}

std::uint64_t model_seed(std::uint64_t seed, int trial) {
  return substream_seed(seed, 2 * static_cast<std::uint64_t>(trial));
}

std::uint64_t site_seed(std::uint64_t seed, int trial) {
  return substream_seed(seed, 2 * static_cast<std::uint64_t>(trial) + 1);
}

MixtureModel simulate_model(const ExperimentSpec& spec, int trial) {
  spec.validate();
  Rng rng(model_seed(spec.seed, trial));
  return permutation_invariant_mixture(spec.theta_count, spec.n, spec.f, spec.g,
                                       spec.mixing_weights(),
                                       resolve_rate_matrix(spec.rate_matrix), rng);
}

Simulation simulate_trial(const ExperimentSpec& spec, int trial) {
  MixtureModel model = simulate_model(spec, trial);
  SiteData data = sample_mixture(model, spec.k, site_seed(spec.seed, trial));
  return {std::move(model), std::move(data)};
}

ReconstructOptions pipeline_reconstruct_options() {
  ReconstructOptions opts;
  opts.fallback = true;
  return opts;
}

TrialOutcome reconstruct_trial(const SiteData& data, const AlgoConfig& cfg) {
  TrialOutcome out;
  out.pipeline = run_pipeline(data, cfg);
  out.topologies = reconstruct_all(data, out.pipeline.binning, cfg,
                                   pipeline_reconstruct_options(), &out.reconstruct_stats);
  return out;
}

std::string canonical_dump(const nlohmann::json& j) {
  // nlohmann::json objects are std::map backed, so keys come out sorted.
  return j.dump(2) + "\n";
}

}  // namespace phylomix::harness
