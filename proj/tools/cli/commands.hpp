#pragma once

#include <filesystem>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylomix/harness/experiment.hpp"

namespace phylomix::cli {

// Exit codes, one per error class.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,  // CLI11 parse failures
  kInvalidArgument = 3,
  kValidation = 4,
  kParse = 5,
  kNoQuasicherries = 6,
  kComponentCountMismatch = 7,
  kEmptyBin = 8,
  kInconsistentMetric = 9,
  kIo = 10,
  kHiddenLabels = 11,
  kInternal = 70,
};

// Thrown when reconstruct meets hidden labels outside evaluation mode.
struct HiddenLabelsRefused : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// simulate: one directory per trial under spec.out with truth.nwk,
// alignment.fa and the alignment.json sidecar, plus spec.json at the top.
void cmd_simulate(const harness::ExperimentSpec& spec, bool keep_hidden);

struct ReconstructArgs {
  std::filesystem::path alignment;
  // Defaults to the alignment path with a .json extension when that exists.
  std::optional<std::filesystem::path> sidecar;
  std::filesystem::path out;
  bool evaluation_mode = false;
};
void cmd_reconstruct(const ReconstructArgs& args, const harness::ExperimentSpec& spec);

struct EvaluateArgs {
  std::filesystem::path truth;
  std::filesystem::path reconstructed;
  std::optional<std::filesystem::path> sidecar;
  std::optional<std::filesystem::path> bins;
  // metrics.json, or stdout when empty. A .csv sibling is written alongside.
  std::filesystem::path out;
};
void cmd_evaluate(const EvaluateArgs& args);

// Returns the number of failed criteria.
int cmd_acceptance(const std::vector<std::string>& suites, std::uint64_t seed,
                   const std::filesystem::path& out);

}  // namespace phylomix::cli
