#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phylomix/errors.hpp"
#include "phylomix/harness/acceptance.hpp"
#include "phylomix/harness/evaluation.hpp"
#include "phylomix/newick.hpp"

namespace phylomix::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using harness::ExperimentSpec;

namespace {

std::string trial_dir_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03d", t);
  return buf;
}

// Creates dir; its parent must already exist so a mistyped path fails loudly.
void prepare_out_dir(const fs::path& dir) {
  if (dir.empty()) throw InvalidArgument("--out is required");
  const fs::path parent = fs::absolute(dir).parent_path();
  if (!fs::is_directory(parent)) {
    throw IoError("output directory parent does not exist: " + parent.string());
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

// Flat "key=value" rendering for Newick and FASTA comments, which may not
// hold brackets or newlines.
void flatten(const json& j, const std::string& key, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, key.empty() ? k : key + "." + k, out);
    return;
  }
  std::string value;
  if (j.is_array()) {
    for (const auto& e : j) value += (value.empty() ? "" : ",") + e.dump();
  } else {
    value = j.is_string() ? j.get<std::string>() : j.dump();
  }
  for (char& c : value) {
    if (c == '[' || c == ']' || c == '\n' || c == '\r') c = '_';
  }
  out.push_back(key + "=" + value);
}

std::string compact(const json& j) {
  std::vector<std::string> parts;
  flatten(j, "", parts);
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
  return s;
}

json assignment_json(const SiteBinning& bins, int k) {
  return harness::assignment_from_binning(bins, k);
}

std::vector<int> hidden_from_sidecar(const json& side) {
  if (!side.contains("hidden_N")) throw InvalidArgument("sidecar has no hidden_N");
  return side.at("hidden_N").get<std::vector<int>>();
}

}  // namespace

void cmd_simulate(const ExperimentSpec& spec, bool keep_hidden) {
  spec.validate();
  prepare_out_dir(spec.out);
  const json spec_json = harness::to_json(spec);
  write_text(spec.out / "spec.json", harness::canonical_dump(spec_json));
  for (int t = 0; t < spec.trials; ++t) {
    const fs::path dir = spec.out / trial_dir_name(t);
    fs::create_directories(dir);
    const harness::Simulation sim = harness::simulate_trial(spec, t);
    const json provenance{{"spec", spec_json}, {"trial", t}};

    write_newick_file(dir / "truth.nwk", sim.model.components, true, compact(provenance));

    auto aln = open_out(dir / "alignment.fa");
    aln << "; " << compact(provenance) << '\n';
    write_alignment(aln, sim.data);
    if (!aln) throw IoError("write failed: " + (dir / "alignment.fa").string());

    json side{{"k", sim.data.k()},
              {"n", sim.data.n()},
              {"r", sim.data.r()},
              {"seed", spec.seed},
              {"model_seed", harness::model_seed(spec.seed, t)},
              {"site_seed", harness::site_seed(spec.seed, t)},
              {"trial", t},
              {"spec", spec_json}};
    if (keep_hidden) side["hidden_N"] = *sim.data.hidden();
    write_text(dir / "alignment.json", harness::canonical_dump(side));
  }
}

void cmd_reconstruct(const ReconstructArgs& args, const ExperimentSpec& spec) {
  spec.validate();
  std::ifstream in(args.alignment, std::ios::binary);
  if (!in) throw IoError("cannot read " + args.alignment.string());
  const Alignment aln = read_alignment(in);

  fs::path sidecar_path;
  if (args.sidecar) {
    sidecar_path = *args.sidecar;
  } else {
    fs::path guess = args.alignment;
    guess.replace_extension(".json");
    if (fs::exists(guess)) sidecar_path = guess;
  }
  std::optional<std::vector<int>> hidden;
  if (!sidecar_path.empty()) {
    const json side = read_json(sidecar_path);
    if (side.contains("hidden_N")) {
      if (!args.evaluation_mode) {
        throw HiddenLabelsRefused("sidecar " + sidecar_path.string() +
                                  " carries hidden labels; pass --evaluation-mode to use them "
                                  "for scoring only");
      }
      hidden = hidden_from_sidecar(side);
      if (static_cast<int>(hidden->size()) != aln.k) {
        throw ValidationError("hidden_N length differs from the alignment length");
      }
    }
  }

  const RateMatrix rm = resolve_rate_matrix(spec.rate_matrix);
  if (aln.max_state > rm.r()) {
    throw ValidationError("alignment uses state " + std::to_string(aln.max_state) +
                          " but the rate matrix has " + std::to_string(rm.r()) + " states");
  }
  // The pipeline only ever sees unlabeled data.
  const SiteData data(aln.k, aln.n, rm, aln.states);
  const AlgoConfig cfg = spec.algo_config(0);

  prepare_out_dir(args.out);
  const harness::TrialOutcome out = harness::reconstruct_trial(data, cfg);
  const auto& diag = out.pipeline.diagnostics;
  const SiteBinning raw = bin_sites(out.pipeline.statistics, diag.constants);

  const json provenance{{"spec", harness::to_json(spec)},
                        {"alignment", args.alignment.filename().string()},
                        {"pipeline_seed", cfg.seed}};
  write_newick_file(args.out / "topologies.nwk", out.topologies, false, compact(provenance));

  json forced = json::array();
  for (const auto& s : out.reconstruct_stats) forced.push_back(s.forced_merges);
  json d{{"provenance", provenance},
         {"n", diag.n},
         {"k", diag.k},
         {"constants",
          {{"c_c", diag.constants.c_c},
           {"omega", diag.constants.omega},
           {"c_delta", diag.constants.c_delta},
           {"p_sp", diag.constants.p_sp}}},
         {"quasicherries", diag.quasicherry_count},
         {"sparsified", diag.sparsified_count},
         {"cluster_sizes", diag.cluster_sizes},
         {"unattached_pairs", diag.unattached},
         {"negative_edges_within", diag.negative_edges_within},
         {"theta_found", diag.theta_found},
         {"bin_sizes", diag.bin_sizes},
         {"ambiguous_sites", diag.ambiguity_count},
         {"refined", diag.refined},
         {"refine_moved", diag.refine_moved},
         {"forced_merges", forced}};
  if (hidden) {
    d["evaluation"] = {
        {"binning_accuracy", harness::best_binning_accuracy(out.pipeline.binning, *hidden)},
        {"classification_accuracy", harness::best_binning_accuracy(raw, *hidden)}};
  }
  write_text(args.out / "diagnostics.json", harness::canonical_dump(d));

  const json bins{{"provenance", provenance},
                  {"assignment", assignment_json(out.pipeline.binning, aln.k)},
                  {"statistic_assignment", assignment_json(raw, aln.k)}};
  write_text(args.out / "bins.json", harness::canonical_dump(bins));
}

void cmd_evaluate(const EvaluateArgs& args) {
  const NewickOptions opts{.require_lengths = false};
  const auto truth = read_newick_file(args.truth, opts);
  const auto rec = read_newick_file(args.reconstructed, opts);
  const harness::Matching m = harness::best_matching(truth, rec);

  json metrics{{"truth", args.truth.string()},
               {"reconstructed", args.reconstructed.string()},
               {"matching", m.h},
               {"rf", m.rf},
               {"total_rf", m.total_rf}};
  std::optional<double> binning, classification;
  if (args.bins) {
    if (!args.sidecar) throw InvalidArgument("--bins needs --sidecar for the hidden labels");
    const auto hidden = hidden_from_sidecar(read_json(*args.sidecar));
    const json b = read_json(*args.bins);
    const int theta = static_cast<int>(truth.size());
    const auto to_bins = [&](const char* key) {
      const auto a = b.at(key).get<std::vector<int>>();
      if (a.size() != hidden.size()) throw InvalidArgument("bins and sidecar differ in length");
      return harness::binning_from_assignment(a, theta);
    };
    // Bin t belongs to reconstructed tree t, so the tree matching scores it.
    binning = harness::binning_accuracy(to_bins("assignment"), hidden, m.h);
    classification = harness::binning_accuracy(to_bins("statistic_assignment"), hidden, m.h);
    metrics["binning_accuracy"] = *binning;
    metrics["classification_accuracy"] = *classification;
  }

  if (args.out.empty()) {
    std::cout << harness::canonical_dump(metrics);
    return;
  }
  write_text(args.out, harness::canonical_dump(metrics));
  std::ostringstream csv;
  csv << "component,rf,matched_truth\n";
  for (std::size_t t = 0; t < m.rf.size(); ++t) {
    csv << t + 1 << ',' << m.rf[t] << ',' << m.h[t] + 1 << '\n';
  }
  if (binning) csv << "# binning_accuracy," << *binning << "\n# classification_accuracy,"
                   << *classification << '\n';
  fs::path csv_path = args.out;
  csv_path.replace_extension(".csv");
  write_text(csv_path, csv.str());
}

int cmd_acceptance(const std::vector<std::string>& suites, std::uint64_t seed,
                   const fs::path& out) {
  for (const auto& s : suites) harness::suite_criteria(s);
  harness::AcceptanceOptions opt;
  opt.seed = seed;
  if (!out.empty()) opt.out_dir = out;
  const auto results = harness::run_acceptance(suites, opt);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << harness::format_line(r) << '\n';
    failed += !r.passed();
  }
  std::cout << "report: " << (opt.out_dir / "report.json").string() << std::endl;
  return failed;
}

}  // namespace phylomix::cli
