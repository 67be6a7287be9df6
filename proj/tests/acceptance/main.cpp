// Runs every acceptance suite and prints one line per criterion.
// Exits nonzero when any criterion fails.

#include <iostream>

#include "phylomix/harness/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace phylomix::harness;
  AcceptanceOptions opt;
  if (argc > 1) opt.out_dir = argv[1];
  const auto results = run_acceptance({}, opt);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << format_line(r) << '\n';
    failed += !r.passed();
  }
  std::cout << (failed == 0 ? "all criteria passed" : "some criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
