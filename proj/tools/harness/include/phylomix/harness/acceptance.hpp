#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phylomix/harness/experiment.hpp"

namespace phylomix::harness {

inline constexpr std::uint64_t kAcceptanceSeed = 20120815;

struct CriterionResult {
  int id = 0;
  std::string title;
  // Statistical and structural checks only.
  bool properties_passed = false;
  // Wall-clock limits only.
  bool time_passed = true;
  std::string summary;
  // Deterministic content of the result file (no timings).
  nlohmann::json record;
  double seconds = 0.0;

  bool passed() const { return properties_passed && time_passed; }
};

struct AcceptanceOptions {
  std::uint64_t seed = kAcceptanceSeed;
  // Result files go to out_dir/<run_name>/criterion_<id>.json.
  std::filesystem::path out_dir = "acceptance_results";
  std::string run_name = "run1";
  // Progress lines on stderr.
  bool verbose = true;
};

// The mixture regime shared by criteria 4 to 6.
ExperimentSpec acceptance_regime(std::uint64_t seed);

// "gtr" (1), "correlation" (2), "upsilon" (3), "mixture" (4-6),
// "separation" (7), "builder" (8), "determinism" (9).
const std::vector<std::string>& suite_names();
// Throws InvalidArgument for an unknown name.
std::vector<int> suite_criteria(const std::string& name);

// Runs one suite and writes its result files. "determinism" re-runs every
// other suite under a second run name with two worker threads and compares
// the files byte for byte against a first run (produced on the spot when
// absent).
std::vector<CriterionResult> run_suite(const std::string& name, const AcceptanceOptions& options);

// Runs the given suites in order (all when empty) and writes
// out_dir/report.json. Criterion 9 reuses the first-run files of suites
// that already ran.
std::vector<CriterionResult> run_acceptance(std::vector<std::string> suites,
                                            const AcceptanceOptions& options);

// "PASS criterion 4: ... (12.3 s)".
std::string format_line(const CriterionResult& r);

}  // namespace phylomix::harness
