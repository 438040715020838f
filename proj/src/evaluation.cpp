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

#include "multicast/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "multicast/errors.hpp"

namespace multicast {

MetricCounts& MetricCounts::operator+=(const MetricCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  total_images += o.total_images;
  return *this;
}

namespace {

double ratio(std::int64_t num, std::int64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricReport compute_report(const MetricCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0 || c.total_images < 0) {
    throw ValidationError("metric counts must be non-negative");
  }
  MetricReport r;
  r.accuracy = ratio(c.tp + c.tn, c.total_images, r.accuracy_undefined);
  r.precision = ratio(c.tp, c.tp + c.fp, r.precision_undefined);
  r.recall = ratio(c.tp, c.tp + c.fn, r.recall_undefined);
  const double sum = r.precision + r.recall;
  r.f1_undefined = r.precision_undefined || r.recall_undefined || sum == 0.0;
  r.f1 = r.f1_undefined ? 0.0 : 2.0 * r.precision * r.recall / sum;
  r.ap_undefined = r.precision_undefined || r.recall_undefined;
  r.ap = r.ap_undefined ? 0.0 : r.precision * r.recall;
  return r;
}

MetricCounts score_frames(const std::vector<FrameOutcome>& outcomes, const DetectionLog& gt,
                          ScoreMode mode, double iou_threshold, int count_cl_at_least) {
  if (outcomes.size() != gt.frames.size()) {
    throw ValidationError("outcomes cover " + std::to_string(outcomes.size()) +
                          " frames, ground truth " + std::to_string(gt.frames.size()));
  }
  MetricCounts c;
  c.total_images = static_cast<std::int64_t>(outcomes.size());
  for (std::size_t f = 0; f < outcomes.size(); ++f) {
    const FrameOutcome& o = outcomes[f];
    if (o.frame_id != gt.frames[f].frame_id) {
      throw ValidationError("frame " + std::to_string(o.frame_id) + " has no aligned ground truth");
    }
    std::vector<BoundingBox> sys;
    for (const auto& t : o.tracks) {
      if (mode == ScoreMode::multicast &&
          (value(t.cl) < count_cl_at_least || (t.stage != Stage::stage1 && t.stage != Stage::stage2))) {
        continue;
      }
      sys.push_back(t.box);
    }
    const auto& truth = gt.frames[f].detections;
    if (sys.empty() && truth.empty()) {
      ++c.tn;
      continue;
    }
    // Candidate pairs; equal boxes are interchangeable, so ordering by the
    // box itself keeps counts independent of the input order.
    std::vector<std::tuple<double, std::size_t, BoundingBox, std::size_t>> cand;
    for (std::size_t s = 0; s < sys.size(); ++s) {
      for (std::size_t g = 0; g < truth.size(); ++g) {
        const double v = iou(sys[s], truth[g].box);
        if (v > iou_threshold) cand.emplace_back(v, g, sys[s], s);
      }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      const auto& [va, ga, ba, sa] = a;
      const auto& [vb, gb, bb, sb] = b;
      if (va != vb) return va > vb;
      if (ga != gb) return ga < gb;
      const auto ka = std::tie(ba.x1, ba.y1, ba.x2, ba.y2);
      const auto kb = std::tie(bb.x1, bb.y1, bb.x2, bb.y2);
      if (ka != kb) return ka < kb;
      return sa < sb;
    });
    std::vector<bool> sys_used(sys.size(), false);
    std::vector<bool> gt_used(truth.size(), false);
    std::int64_t matched = 0;
    for (const auto& [v, g, box, s] : cand) {
      if (sys_used[s] || gt_used[g]) continue;
      sys_used[s] = true;
      gt_used[g] = true;
      ++matched;
    }
    c.tp += matched;
    c.fp += static_cast<std::int64_t>(sys.size()) - matched;
    c.fn += static_cast<std::int64_t>(truth.size()) - matched;
  }
  return c;
}

std::string_view to_string(VideoClass c) {
  switch (c) {
    case VideoClass::tp: return "TP";
    case VideoClass::fp: return "FP";
    case VideoClass::tn: return "TN";
    case VideoClass::fn: return "FN";
  }
  return "TN";
}

VideoClass classify(bool gt, bool system_alarm) {
  if (gt) return system_alarm ? VideoClass::tp : VideoClass::fn;
  return system_alarm ? VideoClass::fp : VideoClass::tn;
}

AlarmScore score_alarms(const std::vector<AlarmVerdict>& verdicts) {
  AlarmScore s;
  std::int64_t negatives = 0;
  for (const auto& v : verdicts) {
    switch (v.classification()) {
      case VideoClass::tp: ++s.counts.tp; break;
      case VideoClass::fp: ++s.counts.fp; break;
      case VideoClass::tn: ++s.counts.tn; break;
      case VideoClass::fn: ++s.counts.fn; break;
    }
    if (!v.gt) ++negatives;
  }
  s.counts.total_images = static_cast<std::int64_t>(verdicts.size());
  s.report = compute_report(s.counts);
  s.false_alarm_rate = ratio(s.counts.fp, negatives, s.false_alarm_rate_undefined);
  return s;
}

AlarmComparison compare_alarms(const std::vector<AlarmVerdict>& system,
                               const std::vector<AlarmVerdict>& baseline) {
  std::map<std::string, bool> sys_gt;
  for (const auto& v : system) {
    if (!sys_gt.emplace(v.video_id, v.gt).second) {
      throw ValidationError("video '" + v.video_id + "' listed twice");
    }
  }
  std::map<std::string, bool> base_gt;
  for (const auto& v : baseline) {
    if (!base_gt.emplace(v.video_id, v.gt).second) {
      throw ValidationError("video '" + v.video_id + "' listed twice");
    }
  }
  if (sys_gt != base_gt) throw ValidationError("system and baseline cover different videos");
  AlarmComparison cmp;
  cmp.system = score_alarms(system);
  cmp.baseline = score_alarms(baseline);
  cmp.improvement = cmp.baseline.false_alarm_rate - cmp.system.false_alarm_rate;
  return cmp;
}

// ---------------------------------------------------------------------------
// Alarm tables.

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string part;
  while (std::getline(is, part, ',')) out.push_back(trim(part));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_bit(const std::string& s, std::size_t line) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError(line, "expected 0 or 1, got '" + s + "'");
}

}  // namespace

std::vector<AlarmVerdict> AlarmTable::verdicts(const std::string& system) const {
  const auto it = std::find(systems.begin(), systems.end(), system);
  if (it == systems.end()) throw ValidationError("no system column '" + system + "'");
  const auto col = static_cast<std::size_t>(it - systems.begin());
  std::vector<AlarmVerdict> out;
  for (const auto& r : rows) out.push_back({r.video_id, r.gt, r.alarms[col]});
  return out;
}

AlarmTable parse_alarm_table(std::istream& in) {
  AlarmTable t;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split_commas(s);
    if (!have_header) {
      if (f.size() < 3 || f[0] != "video_id" || f[1] != "gt") {
        throw ParseError(line_no, "header must be 'video_id, gt, <system>...'");
      }
      t.systems.assign(f.begin() + 2, f.end());
      for (const auto& name : t.systems) {
        if (name.empty()) throw ParseError(line_no, "empty system name");
      }
      have_header = true;
      continue;
    }
    if (f.size() != t.systems.size() + 2) {
      throw ParseError(line_no, "expected " + std::to_string(t.systems.size() + 2) + " fields");
    }
    if (f[0].empty()) throw ParseError(line_no, "empty video id");
    AlarmTable::Row r{f[0], parse_bit(f[1], line_no), {}};
    for (std::size_t k = 2; k < f.size(); ++k) r.alarms.push_back(parse_bit(f[k], line_no));
    for (const auto& prev : t.rows) {
      if (prev.video_id == r.video_id) throw ParseError(line_no, "duplicate video '" + r.video_id + "'");
    }
    t.rows.push_back(std::move(r));
  }
  if (!have_header) throw ParseError(line_no, "missing alarm table header");
  return t;
}

AlarmTable read_alarm_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_alarm_table(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  }
}

void write_alarm_table(const AlarmTable& table, std::ostream& out) {
  out << "video_id, gt";
  for (const auto& s : table.systems) out << ", " << s;
  out << "\n";
  for (const auto& r : table.rows) {
    out << r.video_id << ", " << (r.gt ? 1 : 0);
    for (bool a : r.alarms) out << ", " << (a ? 1 : 0);
    out << "\n";
  }
  if (!out) throw IoError("alarm table write failure");
}

// ---------------------------------------------------------------------------
// Report output.

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pct(double v, bool undefined) { return undefined ? "n/a" : fixed(100.0 * v, 2); }
std::string two(double v, bool undefined) { return undefined ? "n/a" : fixed(v, 2); }

nlohmann::json counts_json(const MetricCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}, {"total_images", c.total_images}};
}

nlohmann::json metrics_json(const MetricReport& r) {
  return {{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
          {"f1", r.f1},             {"ap", r.ap}};
}

nlohmann::json undefined_json(const MetricReport& r) {
  nlohmann::json u = nlohmann::json::array();
  if (r.accuracy_undefined) u.push_back("accuracy");
  if (r.precision_undefined) u.push_back("precision");
  if (r.recall_undefined) u.push_back("recall");
  if (r.f1_undefined) u.push_back("f1");
  if (r.ap_undefined) u.push_back("ap");
  return u;
}

}  // namespace

void write_report_table(const std::vector<ReportRecord>& records, std::ostream& out) {
  out << std::left << std::setw(14) << "video" << std::setw(12) << "system" << std::right
      << std::setw(7) << "TP" << std::setw(7) << "FP" << std::setw(7) << "TN" << std::setw(7)
      << "FN" << std::setw(8) << "images" << std::setw(10) << "acc%" << std::setw(10) << "prec%"
      << std::setw(10) << "rec%" << std::setw(7) << "F1" << std::setw(7) << "AP" << "\n";
  for (const auto& r : records) {
    const auto& m = r.report;
    out << std::left << std::setw(14) << r.video_id << std::setw(12) << r.system << std::right
        << std::setw(7) << r.counts.tp << std::setw(7) << r.counts.fp << std::setw(7) << r.counts.tn
        << std::setw(7) << r.counts.fn << std::setw(8) << r.counts.total_images << std::setw(10)
        << pct(m.accuracy, m.accuracy_undefined) << std::setw(10)
        << pct(m.precision, m.precision_undefined) << std::setw(10)
        << pct(m.recall, m.recall_undefined) << std::setw(7) << two(m.f1, m.f1_undefined)
        << std::setw(7) << two(m.ap, m.ap_undefined) << "\n";
  }
}

std::string report_json(const std::vector<ReportRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"video", r.video_id},
                   {"system", r.system},
                   {"counts", counts_json(r.counts)},
                   {"metrics", metrics_json(r.report)},
                   {"undefined", undefined_json(r.report)}});
  }
  return nlohmann::json{{"records", std::move(arr)}}.dump(2);
}

std::string alarm_report_json(const AlarmTable& table) {
  nlohmann::json arr = nlohmann::json::array();
  if (table.systems.empty()) return nlohmann::json{{"systems", arr}}.dump(2);
  const auto base = table.verdicts(table.systems.front());
  for (const auto& name : table.systems) {
    const auto cmp = compare_alarms(table.verdicts(name), base);
    auto undefined = undefined_json(cmp.system.report);
    if (cmp.system.false_alarm_rate_undefined) {
      undefined.push_back("false_alarm_rate");
      undefined.push_back("improvement_vs_baseline");
    }
    arr.push_back({{"name", name},
                   {"counts", counts_json(cmp.system.counts)},
                   {"metrics", metrics_json(cmp.system.report)},
                   {"undefined", std::move(undefined)},
                   {"false_alarm_rate", cmp.system.false_alarm_rate},
                   {"improvement_vs_baseline", cmp.improvement}});
  }
  return nlohmann::json{{"systems", std::move(arr)}}.dump(2);
}

void write_alarm_report(const AlarmTable& table, std::ostream& out) {
  if (table.systems.empty()) return;
  const auto base = table.verdicts(table.systems.front());
  out << std::left << std::setw(14) << "system" << std::right << std::setw(5) << "TP"
      << std::setw(5) << "FP" << std::setw(5) << "TN" << std::setw(5) << "FN" << std::setw(10)
      << "acc%" << std::setw(10) << "prec%" << std::setw(10) << "rec%" << std::setw(7) << "F1"
      << std::setw(9) << "FAR%" << std::setw(13) << "improvement" << "\n";
  for (const auto& name : table.systems) {
    const auto cmp = compare_alarms(table.verdicts(name), base);
    const auto& m = cmp.system.report;
    out << std::left << std::setw(14) << name << std::right << std::setw(5) << cmp.system.counts.tp
        << std::setw(5) << cmp.system.counts.fp << std::setw(5) << cmp.system.counts.tn
        << std::setw(5) << cmp.system.counts.fn << std::setw(10)
        << pct(m.accuracy, m.accuracy_undefined) << std::setw(10)
        << pct(m.precision, m.precision_undefined) << std::setw(10)
        << pct(m.recall, m.recall_undefined) << std::setw(7) << two(m.f1, m.f1_undefined)
        << std::setw(9) << pct(cmp.system.false_alarm_rate, cmp.system.false_alarm_rate_undefined)
        << std::setw(12) << (cmp.system.false_alarm_rate_undefined ? "n/a" : fixed(100.0 * cmp.improvement, 2))
        << (cmp.system.false_alarm_rate_undefined ? " " : "%") << "\n";
  }
}

}  // namespace multicast
