#include "phylomix/harness/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "phylomix/errors.hpp"
#include "phylomix/estimators.hpp"
#include "phylomix/harness/evaluation.hpp"
#include "phylomix/harness/oracles.hpp"
#include "phylomix/newick.hpp"

namespace phylomix::harness {

namespace {

CriterionResult make_result(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and thresholds.
constexpr double kGtrTol = 1e-10;
constexpr double kGtrTimeLimit = 5.0;
constexpr int kRandomGtrCount = 50;

constexpr int kCorrN = 16;
constexpr int kCorrK = 1000000;
constexpr int kCorrPairs = 20;
constexpr int kCorrRequired = 19;
constexpr double kCorrTimeLimit = 60.0;

constexpr int kUpsilonTrees = 100;
constexpr int kUpsilonN = 128;
constexpr int kUpsilonOracleTrees = 10;
constexpr double kUpsilonTimeLimit = 10.0;

constexpr int kMixtureTrials = 20;
constexpr double kSignFraction = 0.95;
constexpr double kBinningAccuracy = 0.99;
constexpr int kTrialsRequired = 18;
constexpr double kMixtureTimeLimit = 300.0;
constexpr double kTrialTimeLimit = 120.0;
// Proper-sparsity proxies judged on the true trees: a pair is stretched in a
// tree when its distance is at least kStretch * ln ln n, and two pairs are far
// when all four cross distances are at least kFar * ln ln n in every tree.
constexpr double kStretch = 1.0;
constexpr double kFar = 1.0;

constexpr int kSeparationK = 100000;
constexpr int kSeparationSeeds = 3;
constexpr double kSeparationAccuracy = 0.95;

constexpr int kBuilderMaxSmallN = 8;
constexpr int kBuilderAgreementMaxN = 6;
constexpr int kBuilderTrees = 100;
constexpr int kBuilderN = 64;
constexpr double kNoiseFraction = 1.0 - 1e-6;  // of tau
constexpr double kBuilderTimeLimit = 120.0;

constexpr double kF = 0.05;
constexpr double kG = 0.2;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void progress(const AcceptanceOptions& opt, const std::string& line) {
  if (opt.verbose) std::cerr << "  " << line << std::endl;
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// ---- criterion 1 ----------------------------------------------------------

struct GtrErrors {
  double stationarity = 0, reversibility = 0, semigroup = 0, spectral = 0;
  double row_sums = 0, taylor = 0, norm_z = 0, mean_z = 0;

  double worst() const {
    return std::max({stationarity, reversibility, semigroup, spectral, row_sums, taylor, norm_z,
                     mean_z});
  }
  json to_json() const {
    return {{"stationarity", stationarity}, {"reversibility", reversibility},
            {"semigroup", semigroup},       {"spectral_mapping", spectral},
            {"row_sums", row_sums},         {"taylor_oracle", taylor},
            {"sum_pi_z2_minus_1", norm_z},  {"sum_pi_z", mean_z}};
  }
};

GtrErrors gtr_errors(const RateMatrix& rm) {
  static const double kWeights[] = {0.01, 0.1, 0.5, 1.0, 3.0};
  GtrErrors e;
  const auto& pi = rm.pi();
  const auto& z = rm.z();
  e.norm_z = std::abs((pi.array() * z.array().square()).sum() - 1.0);
  e.mean_z = std::abs((pi.array() * z.array()).sum());
  const Eigen::MatrixXd d_pi = pi.asDiagonal();
  for (double w : kWeights) {
    const Eigen::MatrixXd m = rm.transition(w);
    e.row_sums = std::max(e.row_sums, (m.rowwise().sum().array() - 1.0).abs().maxCoeff());
    e.stationarity =
        std::max(e.stationarity, (pi.transpose() * m - pi.transpose()).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd flow = d_pi * m;
    e.reversibility = std::max(e.reversibility, max_abs(flow - flow.transpose()));
    for (double w2 : kWeights) {
      e.semigroup =
          std::max(e.semigroup, max_abs(rm.transition(w + w2) - m * rm.transition(w2)));
    }
    // Each eigenpair of Q maps to exp(w lambda) for exp(wQ); the second pair
    // is checked through z, the whole spectrum through the Taylor oracle.
    e.spectral = std::max(e.spectral, (m * z - std::exp(-w) * z).cwiseAbs().maxCoeff());
    e.taylor = std::max(e.taylor, max_abs(m - oracle::taylor_expm(w * rm.q())));
  }
  return e;
}

CriterionResult criterion_gtr(const AcceptanceOptions& opt) {
  CriterionResult r = make_result(1, "GTR kernel identities on presets and random matrices");
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, RateMatrix>> models;
  models.emplace_back("binary-symmetric", RateMatrix::binary_symmetric());
  models.emplace_back("jukes-cantor", RateMatrix::jukes_cantor());
  Rng rng(substream_seed(opt.seed, 1));
  for (int i = 0; i < kRandomGtrCount; ++i) {
    const int states = 2 + i % 4;
    const auto raw = oracle::random_gtr(states, rng);
    models.emplace_back("random-" + std::to_string(i) + "-r" + std::to_string(states),
                        RateMatrix(raw.q, raw.pi));
  }
  json rows = json::array();
  double worst = 0.0;
  int failures = 0;
  for (const auto& [name, rm] : models) {
    const GtrErrors e = gtr_errors(rm);
    worst = std::max(worst, e.worst());
    const bool ok = e.worst() <= kGtrTol;
    failures += !ok;
    rows.push_back({{"model", name}, {"r", rm.r()}, {"ok", ok}, {"errors", e.to_json()}});
  }
  r.seconds = seconds_since(t0);
  r.properties_passed = failures == 0;
  r.time_passed = r.seconds < kGtrTimeLimit;
  r.summary = std::to_string(models.size() - failures) + "/" + std::to_string(models.size()) +
              " matrices within " + fmt(kGtrTol) + " (worst " + fmt(worst, 3) + ")";
  r.record = {{"tolerance", kGtrTol}, {"models", rows}, {"failures", failures}};
  return r;
}

// ---- criterion 2 ----------------------------------------------------------

CriterionResult criterion_correlation(const AcceptanceOptions& opt) {
  CriterionResult r = make_result(2, "single-component correlation identity q = exp(-d)");
  const auto t0 = Clock::now();
  Rng rng(substream_seed(opt.seed, 2));
  const RateMatrix rm = RateMatrix::jukes_cantor();
  MixtureModel mix{{random_phylogeny(kCorrN, kF, kG, rng)}, {1.0}, rm};
  const SiteData data = sample_mixture(mix, kCorrK, substream_seed(opt.seed, 3));
  const Eigen::MatrixXd truth = oracle::floyd_distances(mix.components[0]);
  const double z2 = rm.z_max() * rm.z_max();
  const double tol = 4.0 / std::sqrt(static_cast<double>(kCorrK)) * z2;

  std::set<std::pair<int, int>> chosen;
  std::uniform_int_distribution<int> leaf(1, kCorrN);
  while (static_cast<int>(chosen.size()) < kCorrPairs) {
    const int a = leaf(rng), b = leaf(rng);
    if (a != b) chosen.insert({std::min(a, b), std::max(a, b)});
  }
  json rows = json::array();
  int ok = 0;
  double worst = 0.0;
  for (const auto& [a, b] : chosen) {
    const double q = q_hat(data, a, b);
    const double expected = std::exp(-truth(a - 1, b - 1));
    const double err = std::abs(q - expected);
    worst = std::max(worst, err);
    ok += err <= tol;
    rows.push_back({{"a", a}, {"b", b}, {"q_hat", q}, {"exp_minus_d", expected},
                    {"within", err <= tol}});
  }
  r.seconds = seconds_since(t0);
  r.properties_passed = ok >= kCorrRequired;
  r.time_passed = r.seconds < kCorrTimeLimit;
  r.summary = std::to_string(ok) + "/" + std::to_string(kCorrPairs) + " pairs within " +
              fmt(tol) + " (need " + std::to_string(kCorrRequired) + ", worst " +
              fmt(worst, 3) + ")";
  r.record = {{"tolerance", tol}, {"pairs", rows}, {"within", ok}};
  return r;
}

// ---- criterion 3 ----------------------------------------------------------

CriterionResult criterion_upsilon(const AcceptanceOptions& opt) {
  CriterionResult r = make_result(3, "size bounds on the alpha-close pair sets");
  const auto t0 = Clock::now();
  const double alpha = 4.0 * kG;
  const double lower = kUpsilonN / 4.0;
  const double upper = std::ldexp(1.0, static_cast<int>(std::floor(alpha / kF))) * kUpsilonN;
  Rng rng(substream_seed(opt.seed, 4));
  int in_bounds = 0;
  int oracle_mismatch = 0;
  std::size_t smallest = SIZE_MAX, largest = 0;
  json sizes = json::array();
  for (int t = 0; t < kUpsilonTrees; ++t) {
    const Phylogeny tree = random_phylogeny(kUpsilonN, kF, kG, rng);
    const std::size_t size = upsilon_alpha(tree, alpha).size();
    if (t < kUpsilonOracleTrees && size != oracle::upsilon_size(tree, alpha)) ++oracle_mismatch;
    in_bounds += lower <= size && size <= upper;
    smallest = std::min(smallest, size);
    largest = std::max(largest, size);
    sizes.push_back(size);
  }
  r.seconds = seconds_since(t0);
  r.properties_passed = in_bounds == kUpsilonTrees && oracle_mismatch == 0;
  r.time_passed = r.seconds < kUpsilonTimeLimit;
  r.summary = std::to_string(in_bounds) + "/" + std::to_string(kUpsilonTrees) +
              " trees within [n/4, 2^floor(alpha/f) n]; sizes " + std::to_string(smallest) +
              ".." + std::to_string(largest) + ", oracle mismatches " +
              std::to_string(oracle_mismatch);
  r.record = {{"alpha", alpha}, {"lower", lower},      {"upper", upper},
              {"sizes", sizes}, {"in_bounds", in_bounds}, {"oracle_mismatches", oracle_mismatch}};
  return r;
}

// ---- criteria 4 to 6 ------------------------------------------------------

struct SignCounts {
  long within_positive = 0, within_total = 0;
  long cross_negative = 0, cross_total = 0;
};

// Sign tallies of r_hat over candidate pair-pairs that meet the
// proper-sparsity proxies under the true trees.
SignCounts evaluate_signs(const PipelineResult& res, const MixtureModel& model, double c_c) {
  SignCounts out;
  const auto& pairs = res.candidates;
  if (res.r_hat.size() == 0) return out;
  const int n = model.n();
  const double loglog = std::log(std::log(static_cast<double>(n)));
  std::vector<Eigen::MatrixXd> dist;
  for (const auto& t : model.components) dist.push_back(t.distance_matrix());
  const int theta = model.theta_count();
  // Owner per pair, or -1 when it is not properly owned.
  std::vector<int> owner(pairs.size(), -1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int a = pairs[i].a - 1, b = pairs[i].b - 1;
    int own = -1;
    bool ok = true;
    for (int t = 0; t < theta; ++t) {
      const double d = dist[t](a, b);
      if (d <= c_c) {
        if (own >= 0) ok = false;
        own = t;
      }
    }
    if (!ok || own < 0) continue;
    for (int t = 0; t < theta; ++t) {
      if (t != own && dist[t](a, b) < kStretch * loglog) ok = false;
    }
    if (ok) owner[i] = own;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (owner[i] < 0) continue;
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (owner[j] < 0) continue;
      const int li[2] = {pairs[i].a - 1, pairs[i].b - 1};
      const int lj[2] = {pairs[j].a - 1, pairs[j].b - 1};
      bool far = true;
      for (int x : li) {
        for (int y : lj) {
          for (int t = 0; t < theta && far; ++t) far = x != y && dist[t](x, y) >= kFar * loglog;
        }
      }
      if (!far) continue;
      const double rv = res.r_hat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (owner[i] == owner[j]) {
        ++out.within_total;
        out.within_positive += rv > 0.0;
      } else {
        ++out.cross_total;
        out.cross_negative += rv < 0.0;
      }
    }
  }
  return out;
}

std::vector<CriterionResult> criteria_mixture(const AcceptanceOptions& opt) {
  const ExperimentSpec spec = acceptance_regime(opt.seed);
  SignCounts total;
  int binning_ok = 0, topology_ok = 0, slow_trials = 0;
  double mixture_seconds = 0.0, slowest = 0.0;
  json trials = json::array();
  for (int t = 0; t < spec.trials; ++t) {
    const auto t0 = Clock::now();
    const Simulation sim = simulate_trial(spec, t);
    const SiteData stripped = strip_labels(sim.data);
    const AlgoConfig cfg = spec.algo_config(t);
    json row{{"trial", t}};
    try {
      const TrialOutcome out = reconstruct_trial(stripped, cfg);
      const double secs = seconds_since(t0);
      mixture_seconds += secs;
      slowest = std::max(slowest, secs);
      slow_trials += secs >= kTrialTimeLimit;

      const DerivedConstants& dc = out.pipeline.diagnostics.constants;
      const SignCounts sc = evaluate_signs(out.pipeline, sim.model, dc.c_c);
      total.within_positive += sc.within_positive;
      total.within_total += sc.within_total;
      total.cross_negative += sc.cross_negative;
      total.cross_total += sc.cross_total;

      const auto& hidden = *sim.data.hidden();
      const double acc = best_binning_accuracy(out.pipeline.binning, hidden);
      const double raw_acc =
          best_binning_accuracy(bin_sites(out.pipeline.statistics, dc), hidden);
      const Matching m = best_matching(sim.model.components, out.topologies);
      binning_ok += acc >= kBinningAccuracy;
      topology_ok += m.total_rf == 0;
      int forced = 0;
      for (const auto& s : out.reconstruct_stats) forced += s.forced_merges;
      row.update({{"candidates", out.pipeline.candidates.size()},
                  {"cluster_sizes", out.pipeline.diagnostics.cluster_sizes},
                  {"unattached", out.pipeline.diagnostics.unattached},
                  {"within_positive", sc.within_positive},
                  {"within_total", sc.within_total},
                  {"cross_negative", sc.cross_negative},
                  {"cross_total", sc.cross_total},
                  {"binning_accuracy", acc},
                  {"statistic_binning_accuracy", raw_acc},
                  {"rf", m.rf},
                  {"forced_merges", forced}});
      progress(opt, "mixture trial " + std::to_string(t) + ": binning " + fmt(acc, 5) +
                        ", rf " + std::to_string(m.total_rf) + ", " + fmt(secs, 3) + " s");
    } catch (const Error& e) {
      const double secs = seconds_since(t0);
      mixture_seconds += secs;
      slowest = std::max(slowest, secs);
      row["error"] = e.what();
      progress(opt, "mixture trial " + std::to_string(t) + ": " + e.what());
    }
    trials.push_back(row);
  }
  const double within = total.within_total
                            ? static_cast<double>(total.within_positive) / total.within_total
                            : 0.0;
  const double cross =
      total.cross_total ? static_cast<double>(total.cross_negative) / total.cross_total : 0.0;
  const json regime = to_json(spec);

  std::vector<CriterionResult> out;
  CriterionResult c4 = make_result(4, "r_hat sign structure on separated candidate pairs");
  c4.properties_passed = total.within_total > 0 && total.cross_total > 0 &&
                         within >= kSignFraction && cross >= kSignFraction;
  c4.seconds = mixture_seconds;
  c4.time_passed = mixture_seconds < kMixtureTimeLimit;
  c4.summary = "within r_hat > 0: " + fmt(within) + " of " + std::to_string(total.within_total) +
               ", cross r_hat < 0: " + fmt(cross) + " of " + std::to_string(total.cross_total) +
               " (need " + fmt(kSignFraction) + ")";
  c4.record = {{"regime", regime},
               {"within_fraction", within},
               {"cross_fraction", cross},
               {"within_total", total.within_total},
               {"cross_total", total.cross_total},
               {"trials", trials}};
  out.push_back(c4);

  CriterionResult c5 = make_result(5, "site binning accuracy against the hidden labels");
  c5.properties_passed = binning_ok >= kTrialsRequired;
  c5.seconds = mixture_seconds;
  c5.summary = std::to_string(binning_ok) + "/" + std::to_string(spec.trials) +
               " trials with accuracy >= " + fmt(kBinningAccuracy) + " (need " +
               std::to_string(kTrialsRequired) + ")";
  c5.record = {{"regime", regime}, {"trials_ok", binning_ok}, {"threshold", kBinningAccuracy}};
  out.push_back(c5);

  CriterionResult c6 = make_result(6, "end-to-end topology recovery");
  c6.properties_passed = topology_ok >= kTrialsRequired;
  c6.seconds = mixture_seconds;
  c6.time_passed = slow_trials == 0;
  c6.summary = std::to_string(topology_ok) + "/" + std::to_string(spec.trials) +
               " trials with RF = 0 on every component (need " +
               std::to_string(kTrialsRequired) + "), slowest trial " + fmt(slowest, 3) + " s";
  c6.record = {{"regime", regime}, {"trials_ok", topology_ok}};
  out.push_back(c6);
  return out;
}

// ---- criterion 7 ----------------------------------------------------------

// Accuracy of the clustering-statistic classifier built on oracle pair sets:
// pairs within 4g in their own tree and stretched (>= ln ln n) in the other.
double separation_accuracy(int n, int seed_index, const AcceptanceOptions& opt) {
  ExperimentSpec spec = acceptance_regime(opt.seed);
  spec.n = n;
  spec.k = kSeparationK;
  spec.seed = substream_seed(opt.seed, 700 + static_cast<std::uint64_t>(seed_index));
  const Simulation sim = simulate_trial(spec, 0);
  const double own = 4.0 * spec.g;
  const double stretch = kStretch * std::log(std::log(static_cast<double>(n)));
  const int theta = sim.model.theta_count();
  std::vector<Eigen::MatrixXd> dist;
  for (const auto& t : sim.model.components) dist.push_back(t.distance_matrix());
  std::vector<std::vector<LeafPair>> sets(theta);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int t = 0; t < theta; ++t) {
        bool ok = dist[t](a, b) <= own;
        for (int u = 0; u < theta && ok; ++u) ok = u == t || dist[u](a, b) >= stretch;
        if (ok) sets[t].emplace_back(a + 1, b + 1);
      }
    }
  }
  std::vector<PairSet> clusters;
  for (auto& s : sets) {
    if (s.empty()) return 0.0;
    clusters.emplace_back(std::move(s));
  }
  const DerivedConstants dc = derive_constants(spec.algo_config(), n);
  const SiteBinning bins = bin_sites(sim.data, clusters, dc);
  std::vector<int> identity(theta);
  for (int t = 0; t < theta; ++t) identity[t] = t;
  return binning_accuracy(bins, *sim.data.hidden(), identity);
}

CriterionResult criterion_separation(const AcceptanceOptions& opt) {
  CriterionResult r = make_result(7, "clustering-statistic classifier accuracy across n");
  const auto t0 = Clock::now();
  const int sizes[] = {32, 64, 128};
  json rows = json::array();
  std::vector<double> means;
  for (int n : sizes) {
    double sum = 0.0;
    json per_seed = json::array();
    for (int s = 0; s < kSeparationSeeds; ++s) {
      const double acc = separation_accuracy(n, s, opt);
      per_seed.push_back(acc);
      sum += acc;
    }
    means.push_back(sum / kSeparationSeeds);
    rows.push_back({{"n", n}, {"accuracy", per_seed}, {"mean", means.back()}});
    progress(opt, "separation n=" + std::to_string(n) + ": " + fmt(means.back(), 5));
  }
  const bool monotone = std::is_sorted(means.begin(), means.end());
  r.seconds = seconds_since(t0);
  r.properties_passed = monotone && means.back() >= kSeparationAccuracy;
  r.summary = "mean accuracy " + fmt(means[0]) + " / " + fmt(means[1]) + " / " + fmt(means[2]) +
              " at n = 32/64/128 (need non-decreasing and >= " + fmt(kSeparationAccuracy) +
              " at 128)";
  r.record = {{"rows", rows}, {"non_decreasing", monotone}};
  return r;
}

// ---- criterion 8 ----------------------------------------------------------

Eigen::MatrixXd noisy_metric(const Phylogeny& tree, double tau, double psi, int pattern,
                             Rng& rng) {
  const Eigen::MatrixXd d = oracle::floyd_distances(tree);
  const int n = tree.n();
  const double eps = kNoiseFraction * tau;
  std::vector<double> finite;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) finite.push_back(d(a, b));
  }
  std::nth_element(finite.begin(), finite.begin() + finite.size() / 2, finite.end());
  const double median = finite[finite.size() / 2];
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd out = d;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      double v;
      if (d(a, b) >= psi + tau) {
        v = std::numeric_limits<double>::infinity();
      } else {
        double sign = 1.0;
        switch (pattern) {
          case 0: sign = coin(rng) ? 1.0 : -1.0; break;
          // Compress the metric: short entries grow, long ones shrink.
          case 1: sign = d(a, b) < median ? 1.0 : -1.0; break;
          // Push true cherries apart and everything else together.
          default: sign = tree.neighbors(a)[0].vertex == tree.neighbors(b)[0].vertex ? 1.0 : -1.0;
        }
        v = std::max(0.0, d(a, b) + sign * eps);
      }
      out(a, b) = out(b, a) = v;
    }
  }
  return out;
}

CriterionResult criterion_builder(const AcceptanceOptions& opt) {
  CriterionResult r = make_result(8, "distorted-metric tree builder contract");
  const auto t0 = Clock::now();
  Rng rng(substream_seed(opt.seed, 8));
  std::uniform_real_distribution<double> weight(kF, kG);
  json small = json::array();
  long exact_total = 0, exact_ok = 0, agreement_total = 0, agreement_ok = 0;
  for (int n = 3; n <= kBuilderMaxSmallN; ++n) {
    const auto topologies = oracle::enumerate_topologies(n);
    long ok = 0;
    for (const auto& topo : topologies) {
      std::vector<double> w(topo.edges().size());
      for (double& x : w) x = weight(rng);
      const Phylogeny tree = topo.with_weights(w);
      const DistortedMetric dm = distorted_metric_from_q(
          (-oracle::floyd_distances(tree).array()).exp().matrix(), kF, kG);
      bool good = false;
      try {
        const Phylogeny got = reconstruct_topology(dm, kF, kG);
        good = oracle::same_topology(got, tree);
        if (n <= kBuilderAgreementMaxN) {
          ++agreement_total;
          const auto best = oracle::max_agreement(dm.d, topologies);
          agreement_ok += oracle::same_topology(topologies[best], got);
        }
      } catch (const Error&) {
        good = false;
      }
      ok += good;
    }
    exact_total += static_cast<long>(topologies.size());
    exact_ok += ok;
    small.push_back({{"n", n}, {"topologies", topologies.size()}, {"recovered", ok}});
  }
  progress(opt, "builder small-n: " + std::to_string(exact_ok) + "/" +
                    std::to_string(exact_total));

  int noisy_ok = 0, contract_ok = 0, infinite_entries = 0;
  for (int t = 0; t < kBuilderTrees; ++t) {
    const Phylogeny tree = random_phylogeny(kBuilderN, kF, kG, rng);
    DistortedMetric dm;
    dm.tau = kF / 5.0;
    dm.psi = 5.0 * kG * std::log(static_cast<double>(kBuilderN));
    dm.d = noisy_metric(tree, dm.tau, dm.psi, t % 3, rng);
    infinite_entries += static_cast<int>((dm.d.array() == std::numeric_limits<double>::infinity()).count() / 2);
    const bool contract = check_distortion(dm, tree).ok();
    contract_ok += contract;
    try {
      noisy_ok += contract && oracle::same_topology(reconstruct_topology(dm, kF, kG), tree);
    } catch (const Error&) {
    }
  }
  r.seconds = seconds_since(t0);
  r.properties_passed = exact_ok == exact_total && agreement_ok == agreement_total &&
                        noisy_ok == kBuilderTrees;
  r.time_passed = r.seconds < kBuilderTimeLimit;
  r.summary = "exact n<=8: " + std::to_string(exact_ok) + "/" + std::to_string(exact_total) +
              ", max-agreement oracle n<=6: " + std::to_string(agreement_ok) + "/" +
              std::to_string(agreement_total) + ", noisy n=64: " + std::to_string(noisy_ok) +
              "/" + std::to_string(kBuilderTrees);
  r.record = {{"small", small},
              {"agreement_ok", agreement_ok},
              {"agreement_total", agreement_total},
              {"noisy_recovered", noisy_ok},
              {"noisy_within_contract", contract_ok},
              {"noisy_infinite_entries", infinite_entries},
              {"noise_fraction_of_tau", kNoiseFraction}};
  return r;
}

// ---- files and dispatch ---------------------------------------------------

std::filesystem::path result_path(const AcceptanceOptions& opt, int id) {
  return opt.out_dir / opt.run_name / ("criterion_" + std::to_string(id) + ".json");
}

void write_result(const AcceptanceOptions& opt, const CriterionResult& r) {
  const auto path = result_path(opt, r.id);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  json doc = r.record;
  doc["criterion"] = r.id;
  doc["title"] = r.title;
  doc["properties_passed"] = r.properties_passed;
  doc["seed"] = opt.seed;
  out << canonical_dump(doc);
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<CriterionResult> run_plain_suite(const std::string& name,
                                             const AcceptanceOptions& opt) {
  if (name == "gtr") return {criterion_gtr(opt)};
  if (name == "correlation") return {criterion_correlation(opt)};
  if (name == "upsilon") return {criterion_upsilon(opt)};
  if (name == "mixture") return criteria_mixture(opt);
  if (name == "separation") return {criterion_separation(opt)};
  if (name == "builder") return {criterion_builder(opt)};
  throw InvalidArgument("unknown acceptance suite '" + name + "'");
}

// Sets PHYLOMIX_THREADS for the lifetime of the object.
class ThreadOverride {
 public:
  explicit ThreadOverride(const char* value) {
    if (const char* old = std::getenv("PHYLOMIX_THREADS")) saved_ = old;
    ::setenv("PHYLOMIX_THREADS", value, 1);
  }
  ~ThreadOverride() {
    if (saved_.empty()) {
      ::unsetenv("PHYLOMIX_THREADS");
    } else {
      ::setenv("PHYLOMIX_THREADS", saved_.c_str(), 1);
    }
  }

 private:
  std::string saved_;
};

CriterionResult criterion_determinism(const AcceptanceOptions& opt,
                                      const std::set<std::string>& already_ran) {
  CriterionResult r = make_result(9, "byte-identical results on a second run");
  const auto t0 = Clock::now();
  json suites = json::array();
  int identical = 0, compared = 0;
  for (const auto& name : suite_names()) {
    if (name == "determinism") continue;
    if (!already_ran.count(name)) {
      for (const auto& res : run_plain_suite(name, opt)) write_result(opt, res);
    }
    AcceptanceOptions second = opt;
    second.run_name = opt.run_name + "_rerun";
    {
      ThreadOverride threads("2");
      for (const auto& res : run_plain_suite(name, second)) write_result(second, res);
    }
    for (int id : suite_criteria(name)) {
      const std::string a = read_bytes(result_path(opt, id));
      const std::string b = read_bytes(result_path(second, id));
      const bool same = !a.empty() && a == b;
      identical += same;
      ++compared;
      suites.push_back({{"criterion", id}, {"identical", same}});
    }
    progress(opt, "determinism: re-ran " + name);
  }
  r.seconds = seconds_since(t0);
  r.properties_passed = identical == compared;
  r.summary = std::to_string(identical) + "/" + std::to_string(compared) +
              " result files byte-identical after a rerun with 2 worker threads";
  r.record = {{"files", suites}};
  return r;
}

}  // namespace

ExperimentSpec acceptance_regime(std::uint64_t seed) {
  ExperimentSpec spec;
  spec.n = 128;
  spec.k = 100000;
  spec.theta_count = 2;
  spec.nu = {0.5, 0.5};
  spec.f = kF;
  spec.g = kG;
  spec.rate_matrix = "binary-symmetric";
  spec.trials = kMixtureTrials;
  spec.seed = substream_seed(seed, 456);
  return spec;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"gtr",        "correlation", "upsilon",
                                                 "mixture",    "separation",  "builder",
                                                 "determinism"};
  return names;
}

std::vector<int> suite_criteria(const std::string& name) {
  static const std::map<std::string, std::vector<int>> table = {
      {"gtr", {1}},        {"correlation", {2}}, {"upsilon", {3}},    {"mixture", {4, 5, 6}},
      {"separation", {7}}, {"builder", {8}},     {"determinism", {9}}};
  const auto it = table.find(name);
  if (it == table.end()) throw InvalidArgument("unknown acceptance suite '" + name + "'");
  return it->second;
}

std::vector<CriterionResult> run_suite(const std::string& name, const AcceptanceOptions& opt) {
  suite_criteria(name);
  if (name == "determinism") {
    CriterionResult r = criterion_determinism(opt, {});
    write_result(opt, r);
    return {r};
  }
  auto results = run_plain_suite(name, opt);
  for (const auto& r : results) write_result(opt, r);
  return results;
}

std::vector<CriterionResult> run_acceptance(std::vector<std::string> suites,
                                            const AcceptanceOptions& opt) {
  if (suites.empty()) suites = suite_names();
  for (const auto& s : suites) suite_criteria(s);
  std::vector<CriterionResult> all;
  std::set<std::string> ran;
  for (const auto& name : suite_names()) {
    if (std::find(suites.begin(), suites.end(), name) == suites.end()) continue;
    if (opt.verbose) std::cerr << "suite " << name << std::endl;
    if (name == "determinism") {
      CriterionResult r = criterion_determinism(opt, ran);
      write_result(opt, r);
      all.push_back(r);
      continue;
    }
    for (auto& r : run_suite(name, opt)) all.push_back(std::move(r));
    ran.insert(name);
  }
  json report = json::array();
  for (const auto& r : all) {
    report.push_back({{"criterion", r.id},
                      {"title", r.title},
                      {"passed", r.passed()},
                      {"properties_passed", r.properties_passed},
                      {"time_passed", r.time_passed},
                      {"seconds", r.seconds},
                      {"summary", r.summary}});
  }
  std::filesystem::create_directories(opt.out_dir);
  std::ofstream out(opt.out_dir / "report.json", std::ios::binary);
  out << canonical_dump({{"seed", opt.seed}, {"criteria", report}});
  return all;
}

std::string format_line(const CriterionResult& r) {
  std::string line = r.passed() ? "PASS" : "FAIL";
  line += " criterion " + std::to_string(r.id) + ": " + r.title + ": " + r.summary;
  if (!r.time_passed) line += " [time limit exceeded]";
  line += " (" + fmt(r.seconds, 3) + " s)";
  return line;
}

}  // namespace phylomix::harness
