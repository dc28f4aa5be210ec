// Copyright 2026 The e3p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "e3p/cli.hpp"
#include "test_util.hpp"

using e3p::test::data;
using e3p::test::test_data;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = e3p::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Runs the installed binary through the shell so the real exit status is observed.
Result run_binary(const std::string& args) {
  const std::string cmd = std::string(E3P_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string dense_log(const e3p::test::TempDir& dir, double mw) {
  std::string csv = "t_ms,rail,mw\n";
  for (int t = 0; t <= 60000; t += 10) csv += std::to_string(t) + ",GPU," + std::to_string(static_cast<int>(mw)) + "\n";
  const auto path = dir / "dense.csv";
  e3p::test::write_file(path, csv);
  return path.string();
}

}  // namespace

TEST(CliScreen, PublishedCardsRankAllThirteen) {
  const auto r = run({"screen", "--registry", data("model_cards.csv").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "rank,name,params_m,macs_g,top1_acc_pct,net_score");
  EXPECT_EQ(first.rfind("1,EfficientViT-B1,", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 14);
}

TEST(CliScreen, MarkdownAndJson) {
  const auto md = run({"screen", "--registry", data("model_cards.csv").string()});
  ASSERT_EQ(md.code, 0);
  EXPECT_EQ(md.out.rfind("| Model | Params (M) |", 0), 0u);
  const auto js = run({"screen", "--registry", data("model_cards.csv").string(), "--format", "json"});
  ASSERT_EQ(js.code, 0);
  const auto doc = nlohmann::json::parse(js.out);
  EXPECT_EQ(doc["survivors"].size(), 13u);
  EXPECT_EQ(doc["survivors"][0]["name"], "EfficientViT-B1");
}

TEST(CliScreen, ValidationErrorsExitTwo) {
  EXPECT_EQ(run({"screen", "--registry", data("model_cards.csv").string(), "--min-acc", "101"}).code, 2);
  EXPECT_EQ(run({"screen", "--registry", test_data("violators.csv").string()}).code, 2);
  EXPECT_EQ(run({"screen"}).code, 2);
  EXPECT_EQ(run({"screen", "--registry", data("model_cards.csv").string(), "--format", "xml"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
}

TEST(CliScreen, MissingRegistryIsRuntimeFailure) {
  EXPECT_EQ(run({"screen", "--registry", "/nonexistent/registry.csv"}).code, 1);
}

TEST(CliScreen, ParetoListsDominator) {
  const auto r = run({"screen", "--registry", test_data("pareto_synthetic.csv").string(), "--pareto"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dominated by Front-A"), std::string::npos);
}

TEST(CliMeasure, UsageErrors) {
  EXPECT_EQ(run({"measure", "--source", "recorded"}).code, 2);
  EXPECT_EQ(run({"measure", "--"}).code, 2);
  EXPECT_EQ(run({"measure", "--trials", "0", "--", "true"}).code, 2);
  EXPECT_EQ(run({"measure", "--window", "sometimes", "--", "true"}).code, 2);
  EXPECT_EQ(run({"screen", "--registry", data("model_cards.csv").string(), "--", "true"}).code, 2);
}

TEST(CliMeasure, ThreeTrialsAgainstRecordedLog) {
  e3p::test::TempDir dir;
  const auto log = dense_log(dir, 2000);
  const auto out_path = (dir / "report.json").string();
  const auto r = run({"measure", "--source", "recorded", "--log", log, "--log-format", "normalized", "--rails",
                      "single:GPU", "--model", "toy", "--device", "cpu", "-o", out_path, "--", "sh", "-c",
                      "echo E3P_BEGIN; sleep 0.1; echo 'E3P_END 91.5'"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(e3p::test::slurp(out_path));
  EXPECT_EQ(doc["model"], "toy");
  EXPECT_EQ(doc["trials"].size(), 3u);
  EXPECT_EQ(doc["aggregate"]["acc_pct"], 91.5);
  EXPECT_EQ(doc["aggregate"]["mean_power_mw"], 2000.0);
  EXPECT_FALSE(doc["aggregate"]["degraded"].get<bool>());
}

TEST(CliMeasure, FailingWorkloadIsRuntimeFailure) {
  e3p::test::TempDir dir;
  const auto log = dense_log(dir, 2000);
  const auto out_path = (dir / "partial.json").string();
  const auto r = run({"measure", "--source", "recorded", "--log", log, "--log-format", "normalized", "--rails",
                      "single:GPU", "--trials", "1", "-o", out_path, "--", "sh", "-c", "echo E3P_BEGIN; exit 3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(std::filesystem::exists(out_path));
}

TEST(CliReplay, DeterministicJson) {
  const std::vector<std::string> args = {"replay", "--windows", test_data("tx2_windows.json").string(), "--telemetry",
                                         test_data("tx2_tegrastats.log").string(), "--format", "json"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["trials"].size(), 3u);
  EXPECT_EQ(doc["model"], "LeViT_Conv_192");
}

TEST(CliReplay, ConstantFixtureIsTwentyJoules) {
  const auto r = run({"replay", "--windows", test_data("constant_windows.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["aggregate"]["mean_energy_j"], 20.0);
}

TEST(CliReplay, EmptyLogIsRuntimeFailure) {
  e3p::test::TempDir dir;
  e3p::test::write_file(dir / "empty.log", "");
  const auto r = run({"replay", "--windows", test_data("rtx_windows.json").string(), "--telemetry",
                      (dir / "empty.log").string(), "--log-format", "nvidia-smi"});
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_NE(r.err.find("insufficient telemetry"), std::string::npos) << r.err;
}

TEST(CliReplay, MarkdownSummary) {
  const auto r = run({"replay", "--windows", test_data("rtx_windows.json").string(), "--telemetry",
                      test_data("rtx_nvidia_smi.log").string(), "--format", "markdown"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("TinyViT-11M_Distilled"), std::string::npos);
}

TEST(CliRank, NoInputsIsUsageError) { EXPECT_EQ(run({"rank"}).code, 2); }

TEST(CliRank, SummaryCsvWithTwoPresets) {
  const auto r = run({"rank", "-i", data("tx2_cifar10.csv").string(), "--preset", "sam5", "--preset", "sam1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| SAM5 | SAM1 |"), std::string::npos);
  EXPECT_NE(r.out.find("| LeViT_Conv_192 |"), std::string::npos);
  const auto js = run({"rank", "-i", data("tx2_cifar10.csv").string(), "--format", "json"});
  ASSERT_EQ(js.code, 0);
  const auto doc = nlohmann::json::parse(js.out);
  EXPECT_EQ(doc["rows"][0]["model"], "LeViT_Conv_192");
  EXPECT_EQ(doc["sort_key"], "SAM5");
}

TEST(CliRank, ReportJsonInput) {
  e3p::test::TempDir dir;
  const auto report = run({"replay", "--windows", test_data("tx2_windows.json").string(), "--telemetry",
                           test_data("tx2_tegrastats.log").string(), "-o", (dir / "r.json").string()});
  ASSERT_EQ(report.code, 0) << report.err;
  const auto r = run({"rank", "-i", (dir / "r.json").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1,LeViT_Conv_192,97.1,"), std::string::npos);
}

TEST(CliRank, InvalidRowsAreSkippedWithWarning) {
  e3p::test::TempDir dir;
  e3p::test::write_file(dir / "s.csv",
                        "model,acc_pct,time_s,avg_power_mw,energy_j\nok,90,10,1000,10\ntiny,90,1,500,0.5\n");
  const auto r = run({"rank", "-i", (dir / "s.csv").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: skipping 'tiny'"), std::string::npos);
  EXPECT_EQ(r.out.find("tiny"), std::string::npos);
}

TEST(CliRank, UnknownPresetOrSortIsUsageError) {
  EXPECT_EQ(run({"rank", "-i", data("tx2_cifar10.csv").string(), "--preset", "fast"}).code, 2);
  EXPECT_EQ(run({"rank", "-i", data("tx2_cifar10.csv").string(), "--sort", "speed"}).code, 2);
}

TEST(CliReport, GapShowsEfficientVitFlip) {
  const auto r = run({"report", "-i", data("tx2_imagenet.csv").string(), "--gap", data("model_cards.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| EfficientViT-B1 | 1 | 11 | yes |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Kendall tau: -0.3846"), std::string::npos);
  EXPECT_NE(r.out.find("NetScore"), std::string::npos);
}

TEST(CliReport, JsonCarriesTableAndGap) {
  const auto r = run(
      {"report", "-i", data("tx2_imagenet.csv").string(), "--gap", data("model_cards.csv").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["table"]["rows"].size(), 13u);
  EXPECT_LT(doc["gap"]["kendall_tau"].get<double>(), 0.5);
  EXPECT_EQ(run({"report", "-i", data("tx2_imagenet.csv").string()}).code, 2);
}

TEST(CliBinary, ExitCodesFromTheRealProcess) {
  EXPECT_EQ(run_binary("screen --registry " + data("model_cards.csv").string()).code, 0);
  EXPECT_EQ(run_binary("screen --registry " + data("model_cards.csv").string() + " --min-acc 101").code, 2);
  EXPECT_EQ(run_binary("measure --trials 0 -- true").code, 2);
  EXPECT_EQ(run_binary("rank").code, 2);
  EXPECT_EQ(run_binary("--help").code, 0);
}

TEST(CliBinary, HandshakeWorkloadThroughTheBinary) {
  e3p::test::TempDir dir;
  const auto log = dense_log(dir, 1500);
  const auto r = run_binary("measure --source recorded --log " + log +
                            " --log-format normalized --rails single:GPU --trials 2 --model sh-toy -- sh -c "
                            "'echo warming; echo E3P_BEGIN; sleep 0.1; echo E3P_END 88.25'");
  ASSERT_EQ(r.code, 0);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["trials"].size(), 2u);
  EXPECT_EQ(doc["aggregate"]["acc_pct"], 88.25);
  EXPECT_EQ(doc["aggregate"]["acc_source"], "workload");
}
