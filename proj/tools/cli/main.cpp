#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "phylomix/errors.hpp"
#include "phylomix/harness/acceptance.hpp"

namespace {

using namespace phylomix;
using phylomix::cli::ExitCode;

// Flags shared by simulate and reconstruct.
struct SpecFlags {
  harness::ExperimentSpec spec;
  std::string sparsify = "on";
  bool no_refine = false;
};

void add_model_flags(CLI::App* cmd, SpecFlags& s) {
  cmd->add_option("--n", s.spec.n, "leaf count");
  cmd->add_option("--theta", s.spec.theta_count, "number of mixture components");
  cmd->add_option("--f", s.spec.f, "smallest edge weight");
  cmd->add_option("--g", s.spec.g, "largest edge weight");
  cmd->add_option("--nu", s.spec.nu, "mixing weights, comma separated")->delimiter(',');
  cmd->add_option("--rate-matrix", s.spec.rate_matrix,
                  "binary-symmetric, jukes-cantor or a rate matrix file");
  cmd->add_option("--seed", s.spec.seed, "master seed");
}

void add_algo_flags(CLI::App* cmd, SpecFlags& s) {
  cmd->add_option("--sparsify", s.sparsify, "random pair sparsification")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--r-hat-margin", s.spec.r_hat_margin, "minimum r_hat for a link");
  cmd->add_option("--r-hat-z", s.spec.r_hat_z,
                  "minimum r_hat in standard errors for a link (0 disables)");
  cmd->add_flag("--discover-theta", s.spec.discover_theta,
                "report the inferred component count instead of failing");
  cmd->add_flag("--no-refine-bins", s.no_refine, "skip the discriminant bin refinement");
}

void finish(SpecFlags& s) {
  s.spec.sparsify = s.sparsify == "on";
  s.spec.refine_bins = !s.no_refine;
}

int run(int argc, char** argv) {
  CLI::App app{"Simulate GTR mixtures on phylogenies and reconstruct every component."};
  app.require_subcommand(1);

  SpecFlags sim;
  bool no_hidden = false;
  auto* simulate = app.add_subcommand("simulate", "simulate trials into one directory each");
  add_model_flags(simulate, sim);
  simulate->add_option("--k", sim.spec.k, "sites per trial");
  simulate->add_option("--trials", sim.spec.trials, "number of trials");
  simulate->add_option("--out", sim.spec.out, "output directory")->required();
  simulate->add_flag("--no-hidden", no_hidden, "leave hidden_N out of the sidecar");

  SpecFlags rec;
  cli::ReconstructArgs rec_args;
  auto* reconstruct =
      app.add_subcommand("reconstruct", "recover the component topologies of an alignment");
  reconstruct->add_option("alignment", rec_args.alignment, "alignment file")->required();
  add_model_flags(reconstruct, rec);
  add_algo_flags(reconstruct, rec);
  reconstruct->add_option("--sidecar", rec_args.sidecar, "sidecar JSON of the alignment");
  reconstruct->add_option("--out", rec_args.out, "output directory")->required();
  reconstruct->add_flag("--evaluation-mode", rec_args.evaluation_mode,
                        "accept hidden labels and score against them");

  cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score reconstructed trees against the truth");
  evaluate->add_option("--truth", eval_args.truth, "true Newick file")->required();
  evaluate->add_option("--reconstructed", eval_args.reconstructed, "reconstructed Newick file")
      ->required();
  evaluate->add_option("--sidecar", eval_args.sidecar, "sidecar JSON with hidden_N");
  evaluate->add_option("--bins", eval_args.bins, "bins.json from reconstruct");
  evaluate->add_option("--out", eval_args.out, "metrics JSON path (stdout when omitted)");

  std::vector<std::string> suites;
  std::uint64_t acceptance_seed = harness::kAcceptanceSeed;
  std::filesystem::path acceptance_out;
  auto* acceptance = app.add_subcommand("acceptance", "run acceptance suites (all by default)");
  acceptance->add_option("suites", suites, "suite names")
      ->check(CLI::IsMember(harness::suite_names()));
  acceptance->add_option("--seed", acceptance_seed, "master seed");
  acceptance->add_option("--out", acceptance_out, "result directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::kOk : ExitCode::kUsage;
  }

  if (*simulate) {
    finish(sim);
    cli::cmd_simulate(sim.spec, !no_hidden);
  } else if (*reconstruct) {
    finish(rec);
    cli::cmd_reconstruct(rec_args, rec.spec);
  } else if (*evaluate) {
    cli::cmd_evaluate(eval_args);
  } else if (*acceptance) {
    // Failed criteria are report entries, not errors.
    cli::cmd_acceptance(suites, acceptance_seed, acceptance_out);
  }
  return ExitCode::kOk;
}

int fail(int code, const char* kind, const std::exception& e) {
  std::cerr << "phylomix: " << kind << ": " << e.what() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "phylomix: parse error";
    if (e.line()) std::cerr << " at line " << e.line();
    if (e.offset()) std::cerr << " at byte " << e.offset();
    std::cerr << ": " << e.what() << std::endl;
    return ExitCode::kParse;
  } catch (const InvalidArgument& e) {
    return fail(ExitCode::kInvalidArgument, "invalid argument", e);
  } catch (const ValidationError& e) {
    return fail(ExitCode::kValidation, "validation error", e);
  } catch (const NoQuasicherries& e) {
    return fail(ExitCode::kNoQuasicherries, "no quasicherries", e);
  } catch (const ComponentCountMismatch& e) {
    return fail(ExitCode::kComponentCountMismatch, "component count mismatch", e);
  } catch (const EmptyBin& e) {
    return fail(ExitCode::kEmptyBin, "empty bin", e);
  } catch (const InconsistentMetric& e) {
    return fail(ExitCode::kInconsistentMetric, "inconsistent metric", e);
  } catch (const cli::HiddenLabelsRefused& e) {
    return fail(ExitCode::kHiddenLabels, "hidden labels", e);
  } catch (const cli::IoError& e) {
    return fail(ExitCode::kIo, "io error", e);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ExitCode::kIo, "io error", e);
  } catch (const nlohmann::json::exception& e) {
    return fail(ExitCode::kParse, "json error", e);
  } catch (const std::exception& e) {
    return fail(ExitCode::kInternal, "internal error", e);
  }
}
