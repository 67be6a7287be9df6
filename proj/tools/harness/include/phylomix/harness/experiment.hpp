#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phylomix/gtr_model.hpp"
#include "phylomix/mixture_cluster.hpp"
#include "phylomix/random_tree.hpp"
#include "phylomix/simulate.hpp"
#include "phylomix/treebuild.hpp"

namespace phylomix::harness {

// Everything needed to regenerate a batch of simulated trials.
struct ExperimentSpec {
  int n = 128;
  int k = 100000;
  int theta_count = 2;
  double f = 0.05;
  double g = 0.2;
  // Empty means uniform.
  std::vector<double> nu;
  std::string rate_matrix = "binary-symmetric";
  int trials = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out;

  // Desk-scale knobs forwarded to AlgoConfig.
  bool sparsify = true;
  double r_hat_margin = 0.0;
  double r_hat_z = 5.0;
  bool discover_theta = false;
  bool refine_bins = true;

  std::vector<double> mixing_weights() const;
  // Smallest mixing weight; AlgoConfig's nu_min.
  double nu_min() const;
  AlgoConfig algo_config(int trial = 0) const;
  // Throws InvalidArgument with the first offending field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentSpec& spec);
// Fields missing from j keep their defaults.
ExperimentSpec spec_from_json(const nlohmann::json& j);

// Stream indices under the spec seed. Trial t draws its model from
// substream 2t and its sites from substream 2t + 1.
std::uint64_t model_seed(std::uint64_t seed, int trial);
std::uint64_t site_seed(std::uint64_t seed, int trial);

struct Simulation {
  MixtureModel model;
  SiteData data;  // carries hidden labels
};

MixtureModel simulate_model(const ExperimentSpec& spec, int trial);
Simulation simulate_trial(const ExperimentSpec& spec, int trial);

// Metric reconstruction settings the harness uses on binned data.
ReconstructOptions pipeline_reconstruct_options();

struct TrialOutcome {
  PipelineResult pipeline;
  std::vector<Phylogeny> topologies;
  std::vector<ReconstructStats> reconstruct_stats;
};

// run_pipeline followed by reconstruct_all on stripped data.
TrialOutcome reconstruct_trial(const SiteData& data, const AlgoConfig& cfg);

// JSON dump with sorted keys and a trailing newline, so equal documents give
// equal bytes.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace phylomix::harness
