#include "helpers.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run shell(const std::string& cmd) {
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

Run run(const std::string& args) { return shell(std::string(TLPO_CLI) + " " + args + " 2>/dev/null"); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tlpo_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthWritesDeterministicCsv) {
  const std::string flags = "synth --m 30 --pos-fraction 0.5 --d 10 --signal 1 --seed 7 -o ";
  ASSERT_EQ(run(flags + path("a.csv")).code, 0);
  ASSERT_EQ(run(flags + path("b.csv")).code, 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  const auto ds = tlpo::load_csv(path("a.csv"));
  EXPECT_EQ(ds.size(), 30u);
  EXPECT_EQ(ds.dims(), 10u);
}

TEST_F(Cli, SynthRejectsDegenerateFraction) {
  EXPECT_NE(run("synth --pos-fraction 1.0 -o " + path("x.csv")).code, 0);
  EXPECT_FALSE(fs::exists(path("x.csv")));
}

TEST_F(Cli, UnknownFlagsAndMissingSubcommand) {
  EXPECT_NE(run("synth --bogus 1").code, 0);
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("eval --input " + path("missing.csv")).code, 0);
}

TEST_F(Cli, EvalJson) {
  ASSERT_EQ(run("synth --signal 1 --seed 3 -o " + path("t.csv")).code, 0);
  const auto r = run("eval --input " + path("t.csv") + " --learner ridge --estimators loo,lpo,tlpo --seed 1");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* e : {"loo", "lpo", "tlpo"}) {
    const double v = j["estimates"][e];
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(j["tlpo"]["scores"].size(), 30u);
  EXPECT_TRUE(j["tlpo"].contains("xi"));
  EXPECT_TRUE(j["tlpo"].contains("ties_broken"));
  // Same flags, same output; jobs do not matter.
  EXPECT_EQ(run("eval --input " + path("t.csv") + " --seed 1 --jobs 3").out, r.out);
}

TEST_F(Cli, EvalDiagnosticLearners) {
  ASSERT_EQ(run("synth --seed 4 -o " + path("t.csv")).code, 0);
  const auto c = nlohmann::json::parse(
      run("eval --input " + path("t.csv") + " --learner constant --estimators loo,lpo,tlpo,kfold-pooled").out);
  for (const auto& [k, v] : c["estimates"].items()) EXPECT_EQ(v.get<double>(), 0.5) << k;
  const auto f = nlohmann::json::parse(run("eval --input " + path("t.csv") + " --learner classfreq --estimators loo").out);
  EXPECT_EQ(f["estimates"]["loo"].get<double>(), 1.0);
}

TEST_F(Cli, EvalSingleClassFails) {
  std::ofstream(path("one.csv")) << "a,label\n1,1\n2,1\n3,1\n";
  EXPECT_NE(run("eval --input " + path("one.csv")).code, 0);
}

TEST_F(Cli, RocTlpoCurve) {
  ASSERT_EQ(run("synth --signal 1 --seed 5 -o " + path("t.csv")).code, 0);
  ASSERT_EQ(run("roc --input " + path("t.csv") + " --mode tlpo -o " + path("roc.csv") + " --scores-csv " +
                path("s.csv") + " --tournament-csv " + path("g.csv"))
                .code,
            0);
  std::istringstream in(slurp(path("roc.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "fpr,tpr,threshold");
  double pf = -1, pt = -1, f = 0, t = 0;
  bool first = true;
  while (std::getline(in, line)) {
    std::sscanf(line.c_str(), "%lf,%lf", &f, &t);
    if (first) {
      EXPECT_EQ(f, 0.0);
      EXPECT_EQ(t, 0.0);
      first = false;
    }
    EXPECT_GE(f, pf);
    EXPECT_GE(t, pt);
    pf = f;
    pt = t;
  }
  EXPECT_EQ(f, 1.0);
  EXPECT_EQ(t, 1.0);
  const auto g = slurp(path("g.csv"));
  EXPECT_EQ(std::count(g.begin(), g.end(), '\n'), 1 + 435);
}

TEST_F(Cli, RocConstantIsDiagonal) {
  ASSERT_EQ(run("synth --seed 6 -o " + path("t.csv")).code, 0);
  const auto r = run("roc --input " + path("t.csv") + " --learner constant");
  EXPECT_EQ(r.out, "fpr,tpr,threshold\n0,0,inf\n1,1,14.5\n");
}

TEST_F(Cli, RocTestModeAgreesWithTlpoOnStrongSignal) {
  ASSERT_EQ(run("synth --d 10 --signal 10 --mu 1 --seed 8 -o " + path("t.csv")).code, 0);
  ASSERT_EQ(run("synth --d 10 --signal 10 --mu 1 --seed 8 --test-set 5000 -o " + path("big.csv")).code, 0);
  const auto a = nlohmann::json::parse(run("roc --input " + path("t.csv") + " -o " + path("a.csv")).out);
  const auto b = nlohmann::json::parse(
      run("roc --input " + path("t.csv") + " --mode test --test " + path("big.csv") + " -o " + path("b.csv")).out);
  EXPECT_NEAR(a["auc"].get<double>(), b["auc"].get<double>(), 0.1);
  EXPECT_NE(run("roc --input " + path("t.csv") + " --mode test").code, 0);
}

TEST_F(Cli, ExperimentWritesReportAndManifest) {
  const std::string flags = "experiment --d 5 --signal 0,1 --fractions 0.2,0.5 --reps 3 --n-test 500 -q --seed 42 -o ";
  ASSERT_EQ(run(flags + path("o1")).code, 0);
  ASSERT_EQ(run(flags + path("o2") + " --jobs 4").code, 0);
  const auto rep = slurp(path("o1") + "/report.csv");
  EXPECT_EQ(rep, slurp(path("o2") + "/report.csv"));
  EXPECT_EQ(std::count(rep.begin(), rep.end(), '\n'), 1 + 4 * 6);
  const auto m = nlohmann::json::parse(slurp(path("o1") + "/manifest.json"));
  EXPECT_EQ(m["master_seed"], 42u);
  EXPECT_EQ(m["report_sha1"].get<std::string>().size(), 40u);
}

TEST_F(Cli, ExperimentReportHashIsGitBlobId) {
  ASSERT_EQ(run("experiment --d 3 --fractions 0.5 --reps 1 --learners constant -q -o " + path("o")).code, 0);
  const auto m = nlohmann::json::parse(slurp(path("o") + "/manifest.json"));
  const auto git = shell("git hash-object " + path("o") + "/report.csv 2>/dev/null");
  if (git.code != 0) GTEST_SKIP() << "git not available";
  EXPECT_EQ(m["report_sha1"].get<std::string>(), git.out.substr(0, 40));
}

TEST_F(Cli, ExperimentAllCellsFailing) {
  EXPECT_NE(run("experiment --d 3 --fractions 0.01 --reps 1 -q -o " + path("o")).code, 0);
  EXPECT_NE(run("experiment --preset nope -o " + path("o")).code, 0);
}

TEST_F(Cli, ExperimentSubsample) {
  ASSERT_EQ(run("synth --m 120 --d 4 --signal 2 --seed 9 -o " + path("pool.csv")).code, 0);
  ASSERT_EQ(run("experiment --subsample " + path("pool.csv") + " --take 30 --fractions 0.5 --reps 5 -q -o " +
                path("o"))
                .code,
            0);
  const auto rep = slurp(path("o") + "/report.csv");
  EXPECT_NE(rep.find("subsample,30,0.5,4,,,ridge,loo"), std::string::npos);
}
