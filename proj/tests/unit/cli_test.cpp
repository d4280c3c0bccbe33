#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cmath>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("mpsxai_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("synth --count 3000 --anomaly-rate 0.01 --seed 4 --out-dir " + dir_.string()), 0);
    ASSERT_EQ(run("train --input " + (dir_ / "synth.csv").string() +
                  " --labels label --epochs 6 --max-bond 4 --out-dir " + dir_.string()),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static int run(const std::string& args, std::string* output = nullptr) {
    const fs::path log = dir_ / "last_output.txt";
    const std::string cmd = std::string(MPSXAI_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static fs::path path(const std::string& name) { return dir_ / name; }
  static std::string input() { return " --input " + path("synth.csv").string() + " --labels label"; }
  static std::string model() { return " --model " + path("model.json").string(); }

  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, MissingInputIsConfigError) {
  std::string out;
  EXPECT_EQ(run("train --input " + path("nope.csv").string(), &out), 2);
  EXPECT_NE(out.find("not found"), std::string::npos) << out;
  EXPECT_EQ(run("score" + model()), 2);
}

TEST_F(Cli, UnknownFlagIsConfigError) { EXPECT_EQ(run("train --bogus 3"), 2); }

TEST_F(Cli, RaggedInputIsParseError) {
  std::ofstream(path("ragged.csv")) << "a,b\n1,2\n3\n";
  EXPECT_EQ(run("train --input " + path("ragged.csv").string() + " --out-dir " + path("r").string()), 1);
}

TEST_F(Cli, HelpListsDefaults) {
  std::string out;
  EXPECT_EQ(run("--help", &out), 0);
  for (const char* needle : {"0.7", "32", "0.05", "1e-07", "auto", "planted-pair", "Exit codes"})
    EXPECT_NE(out.find(needle), std::string::npos) << needle;
}

TEST_F(Cli, TrainIsDeterministic) {
  const auto again = path("again");
  ASSERT_EQ(run("train" + input() + " --epochs 6 --max-bond 4 --out-dir " + again.string()), 0);
  EXPECT_EQ(slurp(again / "model.json"), slurp(path("model.json")));
  EXPECT_TRUE(fs::exists(path("train_report.csv")));
}

TEST_F(Cli, ScoreRowCountMatchesInput) {
  const auto out = path("score");
  ASSERT_EQ(run("score" + input() + model() + " --out-dir " + out.string()), 0);
  const auto lines = lines_of(out / "scores.csv");
  EXPECT_EQ(lines.front(), "row_index,nll,label");
  EXPECT_EQ(lines.size(), 3001u);
  ASSERT_EQ(run("score" + input() + model() + " --eval-only --out-dir " + out.string()), 0);
  EXPECT_EQ(lines_of(out / "scores.csv").size(), 901u);
}

TEST_F(Cli, SweepAutoHasFiftyThresholds) {
  const auto out = path("sweep");
  ASSERT_EQ(run("sweep" + input() + model() + " --out-dir " + out.string()), 0);
  const auto lines = lines_of(out / "sweep.csv");
  ASSERT_EQ(lines.size(), 51u);
  EXPECT_EQ(lines.front(), "threshold,anomalies,attacks");
  long previous = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string t, anomalies;
    std::getline(row, t, ',');
    std::getline(row, anomalies, ',');
    const long a = std::stol(anomalies);
    if (previous >= 0) EXPECT_LE(a, previous);
    previous = a;
  }
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
  ASSERT_EQ(run("sweep" + input() + model() + " --threshold 1,2.5,40 --out-dir " + out.string()), 0);
  EXPECT_EQ(lines_of(out / "sweep.csv").size(), 4u);
  EXPECT_EQ(run("sweep" + input() + model() + " --threshold 1,x --out-dir " + out.string()), 2);
}

TEST_F(Cli, ExplainBrokenCopyRanksCopyFeatureFirst) {
  std::ofstream(path("probe.csv")) << "f0,f1,f2,f3,f4,f5,f6,f7\na,b,a,a,a,a,a,a\n";
  const auto out = path("explain");
  ASSERT_EQ(run("explain --input " + path("probe.csv").string() + model() + " --row 0 --out-dir " +
                out.string()),
            0);
  const auto lines = lines_of(out / "explanations.csv");
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0].substr(0, 17), "row_index,nll,mar");
  std::istringstream first(lines[1]);
  std::vector<std::string> fields;
  for (std::string f; std::getline(first, f, ',');) fields.push_back(f);
  ASSERT_GE(fields.size(), 6u);
  EXPECT_EQ(fields[4], "1");
  EXPECT_TRUE(fields[5] == "f0" || fields[5] == "f1") << lines[1];
}

TEST_F(Cli, ExplainAllFlaggedNeedsNumericThreshold) {
  const auto out = path("explain_all");
  EXPECT_EQ(run("explain" + input() + model() + " --row all-flagged --out-dir " + out.string()), 2);
  ASSERT_EQ(run("explain" + input() + model() + " --row all-flagged --threshold 12 --out-dir " +
                out.string()),
            0);
  EXPECT_EQ(run("explain" + input() + model() + " --row 99999 --out-dir " + out.string()), 2);
}

TEST_F(Cli, ModelTableMismatchIsConfigError) {
  std::ofstream(path("other.csv")) << "x,y\n1,2\n";
  EXPECT_EQ(run("score --input " + path("other.csv").string() + model() + " --out-dir " +
                path("mismatch").string()),
            2);
}

TEST_F(Cli, ReportBundleIsCompleteAndIdempotent) {
  const auto out = path("report");
  const std::string cmd = "report" + input() + model() + " --out-dir " + out.string();
  ASSERT_EQ(run(cmd), 0);
  std::vector<std::string> first;
  for (const char* f : {"entropy.csv", "mi.csv", "distributions.csv", "discrepancy.csv", "importance.csv"}) {
    ASSERT_TRUE(fs::exists(out / f)) << f;
    first.push_back(slurp(out / f));
  }
  ASSERT_EQ(run(cmd), 0);
  std::size_t i = 0;
  for (const char* f : {"entropy.csv", "mi.csv", "distributions.csv", "discrepancy.csv", "importance.csv"})
    EXPECT_EQ(slurp(out / f), first[i++]) << f;
}

TEST_F(Cli, ProductStateReportIsAllZero) {
  const auto out = path("product");
  ASSERT_EQ(run("train" + input() + " --max-bond 1 --epochs 2 --out-dir " + out.string()), 0);
  ASSERT_EQ(run("report" + input() + " --out-dir " + out.string()), 0);
  const auto entropy = lines_of(out / "entropy.csv");
  ASSERT_EQ(entropy.size(), 9u);
  for (std::size_t i = 1; i < entropy.size(); ++i) {
    const double s = std::stod(entropy[i].substr(entropy[i].rfind(',') + 1));
    EXPECT_LT(std::abs(s), 1e-9) << entropy[i];
  }
  for (const auto& line : lines_of(out / "mi.csv")) {
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) {
      if (cell.empty() || !(std::isdigit(cell[0]) || cell[0] == '-')) continue;
      EXPECT_LT(std::abs(std::stod(cell)), 1e-9) << line;
    }
  }
}

TEST_F(Cli, SampleCountZeroAndSeed) {
  const auto out = path("sample");
  ASSERT_EQ(run("sample" + model() + " --count 0 --out-dir " + out.string()), 0);
  EXPECT_EQ(lines_of(out / "samples.csv"), (std::vector<std::string>{"f0,f1,f2,f3,f4,f5,f6,f7"}));
  ASSERT_EQ(run("sample" + model() + " --count 200 --seed 3 --out-dir " + out.string()), 0);
  const auto a = slurp(out / "samples.csv");
  ASSERT_EQ(run("sample" + model() + " --count 200 --seed 3 --out-dir " + out.string()), 0);
  EXPECT_EQ(slurp(out / "samples.csv"), a);
  EXPECT_EQ(lines_of(out / "samples.csv").size(), 201u);
}

TEST_F(Cli, SynthIsDeterministicAndHeaderOnlyForZeroRows) {
  const auto a = path("synth_a"), b = path("synth_b");
  ASSERT_EQ(run("synth --count 100 --seed 9 --out-dir " + a.string()), 0);
  ASSERT_EQ(run("synth --count 100 --seed 9 --out-dir " + b.string()), 0);
  EXPECT_EQ(slurp(a / "synth.csv"), slurp(b / "synth.csv"));
  ASSERT_EQ(run("synth --count 0 --out-dir " + a.string()), 0);
  EXPECT_EQ(lines_of(a / "synth.csv").size(), 1u);
  EXPECT_EQ(run("synth --spec " + path("missing.json").string() + " --out-dir " + a.string()), 2);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(path("run.ini")) << "epochs=2\nmax-bond=2\nseed=5\n";
  const auto a = path("cfg_a"), b = path("cfg_b");
  ASSERT_EQ(run("train" + input() + " --config " + path("run.ini").string() + " --out-dir " + a.string()), 0);
  ASSERT_EQ(run("train" + input() + " --epochs 2 --max-bond 2 --seed 5 --out-dir " + b.string()), 0);
  EXPECT_EQ(slurp(a / "model.json"), slurp(b / "model.json"));
  ASSERT_EQ(run("train" + input() + " --config " + path("run.ini").string() +
                " --max-bond 3 --out-dir " + b.string()),
            0);
  EXPECT_NE(slurp(a / "model.json"), slurp(b / "model.json"));
  std::ofstream(path("bad.ini")) << "no-such-key=1\n";
  EXPECT_EQ(run("train" + input() + " --config " + path("bad.ini").string() + " --out-dir " + a.string()), 2);
}

TEST_F(Cli, InputsAreNotModified) {
  const auto before = slurp(path("synth.csv"));
  const auto model_before = slurp(path("model.json"));
  const auto out = path("mutation");
  ASSERT_EQ(run("score" + input() + model() + " --out-dir " + out.string()), 0);
  ASSERT_EQ(run("report" + input() + model() + " --out-dir " + out.string()), 0);
  EXPECT_EQ(slurp(path("synth.csv")), before);
  EXPECT_EQ(slurp(path("model.json")), model_before);
}
