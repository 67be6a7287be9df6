#include <benchmark/benchmark.h>

#include "phylomix/estimators.hpp"
#include "phylomix/harness/experiment.hpp"
#include "phylomix/mixture_cluster.hpp"
#include "phylomix/treebuild.hpp"

namespace {

using namespace phylomix;

harness::ExperimentSpec spec_for(int n, int k) {
  harness::ExperimentSpec spec;
  spec.n = n;
  spec.k = k;
  spec.seed = 11;
  return spec;
}

void BM_SampleMixture(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)), 20000);
  const MixtureModel model = harness::simulate_model(spec, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_mixture(model, spec.k, 3));
  state.SetItemsProcessed(state.iterations() * spec.k);
}
BENCHMARK(BM_SampleMixture)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_QHatMatrix(benchmark::State& state) {
  const auto sim = harness::simulate_trial(spec_for(static_cast<int>(state.range(0)), 50000), 0);
  for (auto _ : state) benchmark::DoNotOptimize(q_hat_matrix(sim.data));
}
BENCHMARK(BM_QHatMatrix)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RHatMatrix(benchmark::State& state) {
  const auto spec = spec_for(128, 50000);
  const auto sim = harness::simulate_trial(spec, 0);
  std::vector<LeafPair> pairs;
  for (const auto& p : upsilon_alpha(sim.model.components[0], 4 * spec.g)) {
    if (static_cast<int>(pairs.size()) == state.range(0)) break;
    pairs.push_back(p);
  }
  const PairSet ps(pairs);
  for (auto _ : state) benchmark::DoNotOptimize(r_hat_matrix(sim.data, ps));
}
BENCHMARK(BM_RHatMatrix)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ReconstructTopology(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)), 1);
  const Phylogeny t = harness::simulate_model(spec, 0).components[0];
  const DistortedMetric dm =
      distorted_metric_from_q((-t.distance_matrix()).array().exp().matrix(), spec.f, spec.g);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_topology(dm, spec.f, spec.g));
}
BENCHMARK(BM_ReconstructTopology)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RunPipeline(benchmark::State& state) {
  const auto spec = spec_for(128, 100000);
  const SiteData data = strip_labels(harness::simulate_trial(spec, 0).data);
  const AlgoConfig cfg = spec.algo_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(data, cfg));
}
BENCHMARK(BM_RunPipeline)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
