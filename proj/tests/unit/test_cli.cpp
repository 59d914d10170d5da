#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = ecc::cli::dispatch(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ecc_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, MpCheck) {
  const auto r = run({"mp", "check", "--c", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  int pass = 0;
  for (std::size_t pos = 0; (pos = r.out.find("PASS", pos)) != std::string::npos; ++pos) ++pass;
  EXPECT_EQ(pass, 3);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"constants", "--c", "0.5", "--lambda1", "-1", "--lambda2", "1"}).code, 2);
  EXPECT_EQ(run({"constants", "--c", "0.5", "--lambda1", "1", "--lambda2", "1"}).code, 0);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"simulate", "--reps", "2"}).code, 2);  // seed is mandatory
  EXPECT_EQ(run({"optimize", "--kind", "INT", "--split", "2", "--c", "2", "--grid", "1.4,1.5"}).code, 0);
  EXPECT_EQ(run({"mp", "check", "--c", "-2"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, OptimizeFlagsInequality) {
  const auto r = run({"optimize", "--kind", "INT", "--split", "3", "--u", "1", "--v", "1", "--varrho", "0.75", "--rho",
                      "0.5", "--c", "0.5", "--grid", "0.05:10:100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("prediction_optimal 0.5"), std::string::npos);
  EXPECT_NE(r.out.find("unequal yes"), std::string::npos) << r.out;
}

TEST(Cli, VarianceCurveCsv) {
  const auto r = run({"variance-curve", "--c", "2", "--grid", "0.5,1,5", "--kinds", "INT", "--splits", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("kind,split,lambda,total,var_of_cond_exp,exp_of_cond_var,degenerate_flag\n", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
}

TEST(Cli, SimulateSummarizeRoundTripAndConfigEquivalence) {
  const auto d1 = scratch("flags"), d2 = scratch("file"), d3 = scratch("threads");
  const std::vector<std::string> flags{"--n", "30", "--c", "0.5", "--split", "2", "--grid", "0.5,2",
                                       "--reps", "4", "--seed", "17"};
  auto args = flags;
  args.insert(args.begin(), "simulate");
  args.insert(args.end(), {"--out", d1.string()});
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = slurp(d1 / "summary.csv");
  const auto records = slurp(d1 / "records.csv");
  EXPECT_FALSE(summary.empty());

  // same run specified by config file only
  r = run({"simulate", "--config", (d1 / "config.txt").string(), "--out", d2.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(d2 / "summary.csv"), summary);
  EXPECT_EQ(slurp(d2 / "records.csv"), records);

  // flags override the file
  r = run({"simulate", "--config", (d1 / "config.txt").string(), "--reps", "3", "--threads", "4", "--out",
           d3.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(d3 / "records.csv"), records);

  // summarize reproduces summary.csv
  const auto out = d1 / "resummary.csv";
  r = run({"summarize", "--config", (d1 / "config.txt").string(), "--records", (d1 / "records.csv").string(), "--out",
           out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out), summary);
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST(Cli, PredMseAndBilinearProbe) {
  auto r = run({"pred-mse", "--c", "0.5", "--u", "1", "--grid", "0.25,0.5,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("prediction_optimal_lambda 0.5"), std::string::npos);
  r = run({"lemma-probe", "--n", "40", "--draws", "10"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, BootstrapRow) {
  const auto r = run({"bootstrap", "--n", "30", "--c", "0.5", "--split", "3", "--grid", "1", "--kinds", "INT", "--B",
                      "5", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("kind,split,lambda,n,p,B,variance_estimate,clamped_fraction\nINT,3,1,30,15,5,", 0), 0u)
      << r.out;
}
