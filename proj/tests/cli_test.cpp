// Copyright 2026 The Multicast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "multicast/errors.hpp"
#include "multicast/manifest.hpp"
#include "multicast/statemachine.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace multicast;

namespace {

struct Result {
  int code = 0;
  std::string output;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(MULTICAST_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, "popen failed"};
  std::array<char, 4096> buf;
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("multicast_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

const char* kStaticScenario = R"([scenario]
frames = 30
dims = 640x480

[object]
keyframes = 0: 200,150,260,200
visible = 0..30
)";

const char* kMovingScenario = R"([scenario]
frames = 40
dims = 640x480

[object]
keyframes = 0: 100,100,160,150; 39: 400,200,460,250

[intermittent_fp]
frames = 3, 9, 17, 25, 33

[dropout]
object = 1
frames = 12..15
detector = primary
)";

}  // namespace

TEST_F(Cli, GenThenRunStaticObjectAlarmsOnce) {
  spit(path("static.ini"), kStaticScenario);
  const auto gen = cli("gen --config " + path("static.ini") + " --seed 3 --out " + path("vid"));
  ASSERT_EQ(gen.code, 0) << gen.output;
  for (const char* f : {"primary.log", "confirmation.log", "ground_truth.log", "manifest.ini"}) {
    EXPECT_TRUE(fs::exists(path("vid/") + f)) << f;
  }
  const auto run = cli("run --config " + path("vid/manifest.ini") + " --out " + path("out"));
  ASSERT_EQ(run.code, 0) << run.output;
  std::ifstream events(path("out/vid/events.csv"));
  const auto parsed = parse_event_log(events);
  const auto alarms = std::count_if(parsed.begin(), parsed.end(), [](const Event& e) { return e.kind == EventKind::alarm; });
  EXPECT_EQ(alarms, 1);
  EXPECT_EQ(slurp(path("out/alarms.csv")), "video_id, gt, baseline, multicast\nvid, 1, 1, 1\n");
  const auto outcomes = read_outcome_log(path("out/vid/outcomes.jsonl"));
  ASSERT_EQ(outcomes.size(), 30u);
  EXPECT_EQ(outcomes.back().level, AlarmLevel::high);
}

TEST_F(Cli, RunIsByteReproducible) {
  spit(path("moving.ini"), kMovingScenario);
  ASSERT_EQ(cli("gen --config " + path("moving.ini") + " --seed 9 --out " + path("vid")).code, 0);
  ASSERT_EQ(cli("gen --config " + path("moving.ini") + " --seed 9 --out " + path("again/vid")).code, 0);
  EXPECT_EQ(slurp(path("vid/primary.log")), slurp(path("again/vid/primary.log")));
  ASSERT_EQ(cli("run --config " + path("vid/manifest.ini") + " --out " + path("a")).code, 0);
  ASSERT_EQ(cli("run --config " + path("vid/manifest.ini") + " --out " + path("b") + " --jobs 2").code, 0);
  for (const char* f : {"alarms.csv", "vid/events.csv", "vid/outcomes.jsonl", "vid/baseline_outcomes.jsonl"}) {
    EXPECT_EQ(slurp(path("a/") + f), slurp(path("b/") + f)) << f;
  }
  const auto eval = cli("eval --mode frames --config " + path("vid/manifest.ini") + " --outcomes " + path("a") +
                        " --out " + path("report.json"));
  ASSERT_EQ(eval.code, 0) << eval.output;
  EXPECT_NE(slurp(path("report.json")).find("\"records\""), std::string::npos);
}

TEST_F(Cli, EmptyManifestWarns) {
  spit(path("empty.ini"), "[run]\npredictor = linear\n");
  const auto r = cli("run --config " + path("empty.ini") + " --out " + path("out"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("warning"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingLogNamesPath) {
  spit(path("m.ini"), "[video a]\nprimary = nowhere.log\nconfirmation = nowhere.log\n");
  const auto r = cli("run --config " + path("m.ini") + " --out " + path("out"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find(path("nowhere.log")), std::string::npos) << r.output;
}

TEST_F(Cli, BadArgumentsAreUsageErrors) {
  EXPECT_EQ(cli("run").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST_F(Cli, TrainIsSeededAndRejectsEmptyDataset) {
  spit(path("moving.ini"), kMovingScenario);
  ASSERT_EQ(cli("gen --config " + path("moving.ini") + " --seed 1 --out " + path("gen")).code, 0);
  fs::create_directories(path("logs"));
  fs::copy_file(path("gen/ground_truth.log"), path("logs/track.log"));
  spit(path("train.ini"), "[train]\nepochs = 5\nhidden_size = 8\noptimizer = adam\nlearning_rate = 0.01\n");
  const std::string base = "train --logs " + path("logs") + " --config " + path("train.ini") + " --seed 4";
  ASSERT_EQ(cli(base + " --out " + path("a.bin")).code, 0);
  ASSERT_EQ(cli(base + " --out " + path("b.bin")).code, 0);
  EXPECT_EQ(slurp(path("a.bin")), slurp(path("b.bin")));
  const auto curve = slurp(path("a.bin.curve.txt"));
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 6 + 1);

  fs::create_directories(path("none"));
  const auto empty = cli("train --logs " + path("none") + " --out " + path("c.bin"));
  EXPECT_NE(empty.code, 0);
  EXPECT_NE(empty.output.find("empty dataset"), std::string::npos) << empty.output;
}

TEST_F(Cli, LstmPredictorFromManifest) {
  spit(path("moving.ini"), kMovingScenario);
  ASSERT_EQ(cli("gen --config " + path("moving.ini") + " --seed 1 --out " + path("vid")).code, 0);
  fs::create_directories(path("logs"));
  fs::copy_file(path("vid/ground_truth.log"), path("logs/track.log"));
  spit(path("train.ini"), "[train]\nepochs = 3\nhidden_size = 4\n");
  ASSERT_EQ(cli("train --logs " + path("logs") + " --config " + path("train.ini") + " --out " + path("m.bin")).code, 0);
  auto manifest = slurp(path("vid/manifest.ini"));
  manifest.replace(manifest.find("linear"), 6, "lstm:" + path("m.bin"));
  spit(path("vid/manifest.ini"), manifest);
  const auto r = cli("run --config " + path("vid/manifest.ini") + " --out " + path("out"));
  EXPECT_EQ(r.code, 0) << r.output;
}

TEST_F(Cli, EvalAlarmTable) {
  const oracle::AlarmColumns cols;
  std::ostringstream table;
  table << "video_id, gt, baseline, fsl, fel\n";
  for (std::size_t i = 0; i < cols.gt.size(); ++i) {
    table << "VideoAlarm" << i + 1 << ", " << cols.gt[i] << ", " << cols.baseline[i] << ", " << cols.fsl[i]
          << ", " << cols.fel[i] << "\n";
  }
  spit(path("table.csv"), table.str());
  const auto r = cli("eval --mode alarms --table " + path("table.csv") + " --out " + path("report.json"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("improvement fsl vs baseline: 60%"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("improvement fel vs baseline: 80%"), std::string::npos) << r.output;
  const auto js = slurp(path("report.json"));
  EXPECT_NE(js.find("\"false_alarm_rate\""), std::string::npos);
}

TEST(Manifest, ParsesAndResolvesPaths) {
  const auto dir = fs::temp_directory_path() / "multicast_manifest_test";
  fs::remove_all(dir);
  spit(dir / "logs/p.log", "");
  spit(dir / "logs/c.log", "");
  std::istringstream in("[run]\npredictor = linear\nhistory_length = 6\n\n[video v1]\nprimary = logs/p.log\n"
                        "confirmation = logs/c.log\ngt_alarm = 0\n");
  const auto m = parse_manifest(in, dir);
  ASSERT_EQ(m.videos.size(), 1u);
  EXPECT_EQ(m.videos[0].primary, dir / "logs/p.log");
  EXPECT_EQ(m.config.history_length, 6);
  std::istringstream dup("[video v1]\nprimary = logs/p.log\nconfirmation = logs/c.log\n"
                         "[video v1]\nprimary = logs/p.log\nconfirmation = logs/c.log\n");
  EXPECT_THROW(parse_manifest(dup, dir), ValidationError);
  std::istringstream bad("[run]\nspatial_streak_required = many\n");
  EXPECT_THROW(parse_manifest(bad, dir), Error);
  fs::remove_all(dir);
}
