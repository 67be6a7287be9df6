#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "phylomix/harness/evaluation.hpp"
#include "phylomix/harness/oracles.hpp"
#include "phylomix/newick.hpp"
#include "phylomix/random_tree.hpp"

namespace phylomix {
namespace {

namespace fs = std::filesystem;
namespace oracle = harness::oracle;

TEST(BestMatching, RecoversSwappedOrder) {
  Rng rng(1);
  const Phylogeny a = random_phylogeny(16, 0.05, 0.2, rng);
  const Phylogeny b = random_phylogeny(16, 0.05, 0.2, rng);
  const Phylogeny c = random_phylogeny(16, 0.05, 0.2, rng);
  const harness::Matching m = harness::best_matching({a, b, c}, {c, a, b});
  EXPECT_EQ(m.h, (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(m.total_rf, 0);
  const harness::Matching partial = harness::best_matching({a, b}, {b, c});
  EXPECT_EQ(partial.h[0], 1);
  EXPECT_EQ(partial.rf[1], oracle::brute_force_rf(c, a));
}

TEST(BinningAccuracy, AssignmentRoundTripAndBestBijection) {
  const std::vector<int> hidden{0, 0, 1, 1, 1, 0};
  const std::vector<int> assignment{1, 1, 0, 0, 1, 1};
  const SiteBinning bins = harness::binning_from_assignment(assignment, 2);
  EXPECT_EQ(harness::assignment_from_binning(bins, 6), assignment);
  EXPECT_DOUBLE_EQ(harness::binning_accuracy(bins, hidden, {0, 1}), 1.0 / 6);
  EXPECT_DOUBLE_EQ(harness::binning_accuracy(bins, hidden, {1, 0}), 5.0 / 6);
  EXPECT_DOUBLE_EQ(harness::best_binning_accuracy(bins, hidden), 5.0 / 6);
}

TEST(Oracles, CountsAndTaylor) {
  EXPECT_EQ(oracle::topology_count(3), 1u);
  EXPECT_EQ(oracle::topology_count(6), 105u);
  EXPECT_EQ(oracle::enumerate_topologies(6).size(), 105u);
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, -1, 0;
  const Eigen::MatrixXd rot = oracle::taylor_expm(a);
  EXPECT_NEAR(rot(0, 0), std::cos(1.0), 1e-13);
  EXPECT_NEAR(rot(0, 1), std::sin(1.0), 1e-13);
  const Phylogeny cat = oracle::caterpillar(6, 1.0);
  EXPECT_EQ(oracle::quartet_split(cat, 1, 2, 5, 6), 0);
  EXPECT_EQ(oracle::quartet_split(cat, 1, 5, 2, 6), 1);
}

// Process-level tests against the built binary.

struct CliRun {
  int code = -1;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("phylomix_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path log = dir_ / "log.txt";
    const std::string cmd =
        std::string(PHYLOMIX_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = slurp(log);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

TEST_F(Cli, SimulateIsByteDeterministic) {
  const std::string base = "simulate --n 12 --k 500 --trials 2 --seed 5 --out ";
  ASSERT_EQ(run(base + path("a")).code, 0);
  ASSERT_EQ(run(base + path("b")).code, 0);
  for (const char* f : {"spec.json", "trial_000/truth.nwk", "trial_001/alignment.fa",
                        "trial_001/alignment.json"}) {
    const std::string a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a/trial_000/alignment.fa"), slurp(dir_ / "a/trial_001/alignment.fa"));
}

TEST_F(Cli, SimulateThreeLeaves) {
  ASSERT_EQ(run("simulate --n 3 --k 10 --out " + path("s")).code, 0);
  const auto trees = read_newick_file(dir_ / "s/trial_000/truth.nwk", {});
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(trees[0].n(), 3);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("simulate --n 8 --k 10 --out " + path("missing/deeper")).code, 10);
  EXPECT_EQ(run("simulate --n 8 --k 10 --f 0.5 --g 0.2 --out " + path("bad")).code, 3);
  EXPECT_EQ(run("acceptance nonsense").code, 2);
  EXPECT_EQ(run("").code, 2);

  ASSERT_EQ(run("simulate --n 8 --k 200 --out " + path("h")).code, 0);
  EXPECT_EQ(run("reconstruct " + path("h/trial_000/alignment.fa") + " --out " + path("r")).code,
            11);

  std::ofstream(dir_ / "corrupt.fa") << ">1\n1212\n>2\n12*2\n";
  const CliRun parse = run("reconstruct " + path("corrupt.fa") + " --out " + path("r"));
  EXPECT_EQ(parse.code, 5);
  EXPECT_NE(parse.output.find("line 4"), std::string::npos) << parse.output;
}

// Two components at desk scale, so clustering finds two and --theta 3 fails.
TEST_F(Cli, ComponentCountMismatch) {
  ASSERT_EQ(run("simulate --n 128 --k 100000 --seed 3 --no-hidden --out " + path("m")).code, 0);
  const CliRun r = run("reconstruct " + path("m/trial_000/alignment.fa") + " --theta 3 --out " +
                    path("r"));
  EXPECT_EQ(r.code, 7) << r.output;
}

TEST_F(Cli, EvaluateIdenticalTrees) {
  ASSERT_EQ(run("simulate --n 10 --k 10 --out " + path("s")).code, 0);
  const std::string truth = path("s/trial_000/truth.nwk");
  ASSERT_EQ(run("evaluate --truth " + truth + " --reconstructed " + truth + " --out " +
                path("eval.json"))
                .code,
            0);
  const auto metrics = nlohmann::json::parse(slurp(dir_ / "eval.json"));
  EXPECT_EQ(metrics.at("total_rf"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "eval.csv"));
}

TEST_F(Cli, SingleComponentRoundTrip) {
  ASSERT_EQ(run("simulate --theta 1 --n 16 --k 40000 --seed 9 --out " + path("s")).code, 0);
  const CliRun rec = run("reconstruct " + path("s/trial_000/alignment.fa") +
                      " --theta 1 --evaluation-mode --out " + path("r"));
  ASSERT_EQ(rec.code, 0) << rec.output;
  for (const char* f : {"topologies.nwk", "diagnostics.json", "bins.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "r" / f)) << f;
  }
  const CliRun eval = run("evaluate --truth " + path("s/trial_000/truth.nwk") + " --reconstructed " +
                       path("r/topologies.nwk") + " --sidecar " +
                       path("s/trial_000/alignment.json") + " --bins " + path("r/bins.json"));
  ASSERT_EQ(eval.code, 0) << eval.output;
  const auto metrics = nlohmann::json::parse(eval.output);
  EXPECT_EQ(metrics.at("total_rf"), 0);
  EXPECT_DOUBLE_EQ(metrics.at("binning_accuracy").get<double>(), 1.0);
}

}  // namespace
}  // namespace phylomix
