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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/statemachine.hpp"

namespace multicast {

struct MetricCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  std::int64_t total_images = 0;

  MetricCounts& operator+=(const MetricCounts& o);
  friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

// Ratios in [0, 1]. A metric whose denominator is zero reads 0 and has its
// `*_undefined` flag set.
struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;
  bool accuracy_undefined = false;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool ap_undefined = false;
};

MetricReport compute_report(const MetricCounts& c);

enum class ScoreMode {
  multicast,  // stage-1/stage-2 boxes with cl >= count_cl_at_least
  baseline,   // every reported box
};

// Frame-level counts against a ground-truth log with the same frame ids.
// System boxes are matched to ground truth greedily by IoU descending; only
// pairs with IoU > iou_threshold match. Throws ValidationError when the
// frame ids differ.
MetricCounts score_frames(const std::vector<FrameOutcome>& outcomes, const DetectionLog& gt,
                          ScoreMode mode = ScoreMode::multicast, double iou_threshold = 0.7,
                          int count_cl_at_least = 2);

enum class VideoClass { tp, fp, tn, fn };

std::string_view to_string(VideoClass c);
VideoClass classify(bool gt, bool system_alarm);

struct AlarmVerdict {
  std::string video_id;
  bool gt = false;
  bool system_alarm = false;

  VideoClass classification() const { return classify(gt, system_alarm); }
};

struct AlarmScore {
  MetricCounts counts;  // total_images = number of videos
  MetricReport report;
  // FP videos over videos with gt = 0.
  double false_alarm_rate = 0.0;
  bool false_alarm_rate_undefined = false;
};

AlarmScore score_alarms(const std::vector<AlarmVerdict>& verdicts);

struct AlarmComparison {
  AlarmScore system;
  AlarmScore baseline;
  // baseline false-alarm rate minus the system's.
  double improvement = 0.0;
};

// Throws ValidationError unless both lists name the same videos with the
// same ground truth.
AlarmComparison compare_alarms(const std::vector<AlarmVerdict>& system,
                               const std::vector<AlarmVerdict>& baseline);

// Alarm table: a header `video_id, gt, <system>...` followed by one row of
// 0/1 cells per video.
struct AlarmTable {
  std::vector<std::string> systems;
  struct Row {
    std::string video_id;
    bool gt = false;
    std::vector<bool> alarms;  // one per system
  };
  std::vector<Row> rows;

  // Verdicts for one system column; throws ValidationError for an unknown name.
  std::vector<AlarmVerdict> verdicts(const std::string& system) const;
};

AlarmTable parse_alarm_table(std::istream& in);
AlarmTable read_alarm_table(const std::filesystem::path& path);
void write_alarm_table(const AlarmTable& table, std::ostream& out);

// A named row of a report: one video or the aggregate of a system.
struct ReportRecord {
  std::string video_id;
  std::string system;
  MetricCounts counts;
  MetricReport report;
};

// Fixed-width text table with percentages for accuracy/precision/recall and
// two decimals for F1 and AP.
void write_report_table(const std::vector<ReportRecord>& records, std::ostream& out);

// {"records": [{"video", "system", "counts": {...}, "metrics": {...},
// "undefined": [...]}, ...]}
std::string report_json(const std::vector<ReportRecord>& records);

// {"systems": [{"name", "counts", "metrics", "false_alarm_rate",
// "improvement_vs_baseline"}, ...]}; the first system is the baseline.
std::string alarm_report_json(const AlarmTable& table);
void write_alarm_report(const AlarmTable& table, std::ostream& out);

}  // namespace multicast
