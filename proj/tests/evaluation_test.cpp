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

#include <algorithm>
#include <sstream>

#include "multicast/errors.hpp"
#include "multicast/evaluation.hpp"
#include "multicast/random.hpp"
#include "oracles.hpp"

using namespace multicast;

namespace {

std::vector<AlarmVerdict> verdicts(const std::array<int, 10>& gt, const std::array<int, 10>& alarm) {
  std::vector<AlarmVerdict> out;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    out.push_back({"VideoAlarm" + std::to_string(i + 1), gt[i] == 1, alarm[i] == 1});
  }
  return out;
}

FrameOutcome frame(std::int64_t id, std::vector<BoundingBox> boxes, int cl = 3,
                   Stage stage = Stage::stage1) {
  FrameOutcome o;
  o.frame_id = id;
  std::int64_t t = 1;
  for (const auto& b : boxes) o.tracks.push_back({t++, confirmation_level(cl), "Handgun Confirmed", b, stage});
  return o;
}

DetectionLog truth(std::vector<std::vector<BoundingBox>> per_frame) {
  std::vector<DetectionRecord> recs;
  for (std::size_t f = 0; f < per_frame.size(); ++f) {
    for (const auto& b : per_frame[f]) recs.push_back({static_cast<std::int64_t>(f), b, "handgun", 1.0});
  }
  return make_dense_log({0, static_cast<std::int64_t>(per_frame.size())}, {100, 100}, recs);
}

}  // namespace

TEST(ComputeReport, DetectionRowsWithinRounding) {
  for (const auto& row : oracle::detection_rows()) {
    MetricCounts c{row.tp, row.fp, row.tn, row.fn, 0};
    const auto r = compute_report(c);
    const std::string who = row.video + " " + row.system;
    EXPECT_NEAR(oracle::round_to(100 * r.precision, 2), row.precision_pct, 0.01) << who;
    EXPECT_NEAR(oracle::round_to(100 * r.recall, 2), row.recall_pct, 0.01) << who;
    EXPECT_NEAR(oracle::round_to(r.f1, 2), row.f1, 0.01) << who;
    EXPECT_NEAR(oracle::round_to(r.ap, 2), row.ap, 0.01) << who;
  }
}

TEST(ComputeReport, AccuracyWithDerivedImageCount) {
  const auto r = compute_report({1665, 77, 378, 246, 2328});
  EXPECT_NEAR(100 * r.accuracy, 87.76, 0.01);
  EXPECT_NEAR(100 * r.precision, 95.58, 0.01);
  EXPECT_NEAR(100 * r.recall, 87.13, 0.01);
  EXPECT_NEAR(r.f1, 0.91, 0.005);
  EXPECT_NEAR(r.ap, 0.83, 0.005);
  const auto v4 = compute_report({26, 33, 0, 109, 0});
  EXPECT_NEAR(100 * v4.precision, 44.07, 0.01);
  EXPECT_NEAR(100 * v4.recall, 19.26, 0.01);
  EXPECT_NEAR(v4.f1, 0.27, 0.005);
  EXPECT_NEAR(v4.ap, 0.08, 0.005);
}

TEST(ComputeReport, ZeroDenominatorsFlagged) {
  const auto r = compute_report({0, 0, 0, 0, 10});
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_FALSE(r.accuracy_undefined);
  EXPECT_TRUE(r.precision_undefined);
  EXPECT_TRUE(r.recall_undefined);
  EXPECT_TRUE(r.f1_undefined);
  EXPECT_TRUE(r.ap_undefined);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_TRUE(compute_report({}).accuracy_undefined);
  EXPECT_THROW(compute_report({-1, 0, 0, 0, 0}), ValidationError);
}

TEST(ScoreAlarms, TenVideoTable) {
  const oracle::AlarmColumns cols;
  const auto base = verdicts(cols.gt, cols.baseline);
  const auto fsl = verdicts(cols.gt, cols.fsl);
  const auto fel = verdicts(cols.gt, cols.fel);

  const auto b = score_alarms(base);
  EXPECT_EQ(b.counts, (MetricCounts{5, 4, 1, 0, 10}));
  auto check = [](const AlarmScore& s, const oracle::AlarmSummary& want) {
    EXPECT_EQ(oracle::round_to(100 * s.report.accuracy, 2), want.accuracy_pct);
    EXPECT_EQ(oracle::round_to(100 * s.report.precision, 2), want.precision_pct);
    EXPECT_EQ(oracle::round_to(100 * s.report.recall, 2), want.recall_pct);
    EXPECT_EQ(oracle::round_to(s.report.f1, 2), want.f1);
  };
  check(b, oracle::kBaselineSummary);
  check(score_alarms(fsl), oracle::kFslSummary);
  check(score_alarms(fel), oracle::kFelSummary);

  const auto cf = compare_alarms(fsl, base);
  const auto ce = compare_alarms(fel, base);
  EXPECT_EQ(100 * cf.baseline.false_alarm_rate, oracle::kBaselineFalseAlarmPct);
  EXPECT_EQ(100 * cf.system.false_alarm_rate, oracle::kFslFalseAlarmPct);
  EXPECT_EQ(100 * ce.system.false_alarm_rate, oracle::kFelFalseAlarmPct);
  EXPECT_EQ(oracle::round_to(100 * cf.improvement, 2), oracle::kFslImprovementPct);
  EXPECT_EQ(oracle::round_to(100 * ce.improvement, 2), oracle::kFelImprovementPct);
}

TEST(ScoreAlarms, Classification) {
  EXPECT_EQ(classify(true, true), VideoClass::tp);
  EXPECT_EQ(classify(false, true), VideoClass::fp);
  EXPECT_EQ(classify(false, false), VideoClass::tn);
  EXPECT_EQ(classify(true, false), VideoClass::fn);
}

TEST(ScoreAlarms, MismatchedVideosRejected) {
  const std::vector<AlarmVerdict> a{{"a", true, true}, {"b", false, false}};
  const std::vector<AlarmVerdict> b{{"a", true, true}, {"c", false, false}};
  EXPECT_THROW(compare_alarms(a, b), ValidationError);
  const std::vector<AlarmVerdict> gt_differs{{"a", true, true}, {"b", true, false}};
  EXPECT_THROW(compare_alarms(a, gt_differs), ValidationError);
}

TEST(ScoreFrames, PerfectMatch) {
  std::vector<FrameOutcome> out;
  std::vector<std::vector<BoundingBox>> gt;
  for (int f = 0; f < 6; ++f) {
    out.push_back(frame(f, {{10, 10, 20, 20}}));
    gt.push_back({{10, 10, 20, 20}});
  }
  const auto c = score_frames(out, truth(gt));
  EXPECT_EQ(c, (MetricCounts{6, 0, 0, 0, 6}));
  const auto r = compute_report(c);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
}

TEST(ScoreFrames, DuplicateIsFalsePositive) {
  const auto c = score_frames({frame(0, {{10, 10, 20, 20}, {10, 10, 20, 20.5}})}, truth({{{10, 10, 20, 20}}}));
  EXPECT_EQ(c, (MetricCounts{1, 1, 0, 0, 1}));
}

TEST(ScoreFrames, TwoPistolsTwoTruePositives) {
  const auto c = score_frames({frame(0, {{60, 60, 80, 80}, {10, 10, 20, 20}})},
                              truth({{{10, 10, 20, 20}, {60, 60, 80, 80}}}));
  EXPECT_EQ(c, (MetricCounts{2, 0, 0, 0, 1}));
}

TEST(ScoreFrames, FiltersByLevelAndStage) {
  const auto gt = truth({{{10, 10, 20, 20}}, {{10, 10, 20, 20}}, {{10, 10, 20, 20}}, {}});
  const std::vector<FrameOutcome> out{frame(0, {{10, 10, 20, 20}}, 1), frame(1, {{10, 10, 20, 20}}, 2),
                                      frame(2, {{10, 10, 20, 20}}, 3, Stage::predicted),
                                      frame(3, {{10, 10, 20, 20}}, 1)};
  EXPECT_EQ(score_frames(out, gt), (MetricCounts{1, 0, 1, 2, 4}));
  EXPECT_EQ(score_frames(out, gt, ScoreMode::baseline), (MetricCounts{3, 1, 0, 0, 4}));
}

TEST(ScoreFrames, IouMustExceedThreshold) {
  // IoU exactly 0.5 against a 0.5 threshold does not count.
  const auto c = score_frames({frame(0, {{0, 0, 10, 5}})}, truth({{{0, 0, 10, 10}}}), ScoreMode::multicast, 0.5);
  EXPECT_EQ(c, (MetricCounts{0, 1, 0, 1, 1}));
}

TEST(ScoreFrames, MisalignedRejected) {
  EXPECT_THROW(score_frames({frame(0, {})}, truth({{}, {}})), ValidationError);
  EXPECT_THROW(score_frames({frame(1, {})}, truth({{}})), ValidationError);
}

TEST(ScoreFrames, PermutationInvariantAndConservesTruth) {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<BoundingBox>> gt(5);
    std::vector<FrameOutcome> out;
    std::size_t gt_boxes = 0;
    for (int f = 0; f < 5; ++f) {
      const auto n = rng.below(3);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double x = rng.uniform(0, 60), y = rng.uniform(0, 60);
        gt[f].push_back({x, y, x + 20, y + 20});
      }
      gt_boxes += n;
      std::vector<BoundingBox> sys;
      for (const auto& g : gt[f]) {
        const auto copies = rng.below(3);
        for (std::uint64_t k = 0; k < copies; ++k) {
          const double d = rng.uniform(-2, 2);
          sys.push_back({g.x1 + d, g.y1, g.x2 + d, g.y2});
        }
      }
      if (rng.below(2)) {
        const double x = rng.uniform(0, 60);
        sys.push_back({x, x, x + 15, x + 25});
      }
      out.push_back(frame(f, sys));
    }
    const auto log = truth(gt);
    const auto c = score_frames(out, log);
    EXPECT_EQ(static_cast<std::size_t>(c.tp + c.fn), gt_boxes);
    for (auto& o : out) {
      std::reverse(o.tracks.begin(), o.tracks.end());
      if (o.tracks.size() > 2) std::swap(o.tracks[0], o.tracks[1]);
    }
    EXPECT_EQ(score_frames(out, log), c);
  }
}

TEST(AlarmTableText, RoundTrip) {
  std::istringstream in("# ten videos\nvideo_id, gt, base, fel\nv1, 1, 1, 0\nv2, 0, 1, 0\n");
  const auto t = parse_alarm_table(in);
  EXPECT_EQ(t.systems, (std::vector<std::string>{"base", "fel"}));
  ASSERT_EQ(t.rows.size(), 2u);
  std::ostringstream os;
  write_alarm_table(t, os);
  EXPECT_EQ(os.str(), "video_id, gt, base, fel\nv1, 1, 1, 0\nv2, 0, 1, 0\n");
  std::istringstream bad("video_id, gt, base\nv1, 1, 2\n");
  EXPECT_THROW(parse_alarm_table(bad), ParseError);
  std::istringstream dup("video_id, gt, base\nv1, 1, 1\nv1, 0, 0\n");
  EXPECT_THROW(parse_alarm_table(dup), ParseError);
}

TEST(ReportOutput, JsonAndTable) {
  std::vector<ReportRecord> recs{{"v", "multicast", {3, 1, 1, 1, 6}, compute_report({3, 1, 1, 1, 6})}};
  const auto js = report_json(recs);
  EXPECT_NE(js.find("\"precision\": 0.75"), std::string::npos);
  std::ostringstream os;
  write_report_table(recs, os);
  EXPECT_NE(os.str().find("75.00"), std::string::npos);
}
