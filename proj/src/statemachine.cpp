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

#include "multicast/statemachine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "multicast/errors.hpp"

namespace multicast {

ConfirmationLevel confirmation_level(int v) {
  if (v < 0 || v > 3) throw ContractError("confirmation level must be in 0..3");
  return static_cast<ConfirmationLevel>(v);
}

std::string_view to_string(AlarmLevel level) {
  switch (level) {
    case AlarmLevel::safe: return "Safe";
    case AlarmLevel::low: return "Low";
    case AlarmLevel::elevated: return "Elevated";
    case AlarmLevel::high: return "High";
  }
  return "Safe";
}

AlarmLevel alarm_level_from_string(std::string_view s) {
  if (s == "Safe") return AlarmLevel::safe;
  if (s == "Low") return AlarmLevel::low;
  if (s == "Elevated") return AlarmLevel::elevated;
  if (s == "High") return AlarmLevel::high;
  throw ContractError("unknown alarm level '" + std::string(s) + "'");
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::stage1: return "stage1";
    case Stage::stage2: return "stage2";
    case Stage::predicted: return "predicted";
    case Stage::held: return "held";
  }
  return "held";
}

Stage stage_from_string(std::string_view s) {
  if (s == "stage1") return Stage::stage1;
  if (s == "stage2") return Stage::stage2;
  if (s == "predicted") return Stage::predicted;
  if (s == "held") return Stage::held;
  throw ContractError("unknown stage '" + std::string(s) + "'");
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::spawn: return "spawn";
    case EventKind::cl_change: return "cl_change";
    case EventKind::alarm: return "alarm";
    case EventKind::recovered: return "recovered";
    case EventKind::fading: return "fading";
    case EventKind::retired: return "retired";
  }
  return "spawn";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::spawn, EventKind::cl_change, EventKind::alarm, EventKind::recovered,
                 EventKind::fading, EventKind::retired}) {
    if (to_string(k) == s) return k;
  }
  throw ContractError("unknown event '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  auto ratio = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in (0, 1]");
  };
  ratio(primary_threshold, "primary_threshold");
  ratio(confirmation_threshold, "confirmation_threshold");
  ratio(prediction_match_iou, "prediction_match_iou");
  ratio(association_iou, "association_iou");
  ratio(crop_pad, "crop_pad");
  if (spatial_streak_required < 1) throw ConfigError("spatial_streak_required must be >= 1");
  if (history_length < 1) throw ConfigError("history_length must be >= 1");
  if (recovery_window < 1) throw ConfigError("recovery_window must be >= 1");
}

std::pair<AlarmLevel, std::string> global_alarm(const std::vector<TrackOutcome>& tracks) {
  if (tracks.empty()) return {AlarmLevel::safe, std::string(tags::kSafeSpace)};
  // Governing track: highest CL, lowest id on ties (tracks are id-ordered).
  const TrackOutcome* gov = &tracks.front();
  for (const auto& t : tracks) {
    if (t.cl > gov->cl) gov = &t;
  }
  switch (gov->cl) {
    case ConfirmationLevel::kZero: return {AlarmLevel::low, std::string(tags::kFading)};
    case ConfirmationLevel::kOne: return {AlarmLevel::low, std::string(tags::kPossible)};
    case ConfirmationLevel::kTwo: return {AlarmLevel::elevated, std::string(tags::kDetected)};
    case ConfirmationLevel::kThree: return {AlarmLevel::high, gov->tag};
  }
  return {AlarmLevel::safe, std::string(tags::kSafeSpace)};
}

namespace {

std::string_view tag_for(ConfirmationLevel cl) {
  switch (cl) {
    case ConfirmationLevel::kZero: return tags::kFading;
    case ConfirmationLevel::kOne: return tags::kPossible;
    case ConfirmationLevel::kTwo: return tags::kDetected;
    case ConfirmationLevel::kThree: return tags::kConfirmed;
  }
  return tags::kFading;
}

// Highest-IoU hit against `pred`; ties go to the higher confidence.
const DetectionRecord& best_hit(const std::vector<DetectionRecord>& hits, const BoundingBox& pred) {
  const DetectionRecord* best = &hits.front();
  double best_iou = iou(best->box, pred);
  for (const auto& h : hits) {
    const double v = iou(h.box, pred);
    if (v > best_iou || (v == best_iou && h.confidence > best->confidence)) {
      best = &h;
      best_iou = v;
    }
  }
  return *best;
}

struct FrameWork {
  std::optional<DetectionRecord> detection;
  bool is_new = false;
  ConfirmationLevel prev_cl = ConfirmationLevel::kZero;
  bool was_temporal = false;
  bool recovered = false;
  bool faded = false;
  std::optional<BoundingBox> history_box;
};

}  // namespace

StepResult step(PipelineState state, const FrameDetections& frame,
                const ConfirmationDetector& confirm, const TrajectoryPredictor* predictor,
                const PipelineConfig& cfg) {
  cfg.validate();
  if (!is_valid(frame.dims)) throw ContractError("frame dims must be positive");
  if (state.last_frame && frame.frame_id <= *state.last_frame) {
    throw OrderingError("frame " + std::to_string(frame.frame_id) + " after frame " +
                        std::to_string(*state.last_frame));
  }
  state.last_frame = frame.frame_id;
  const FrameDims dims = frame.dims;
  const auto history_cap = static_cast<std::size_t>(std::max(cfg.history_length, 5));

  auto query = [&](const BoundingBox& region) {
    auto hits = confirm.region_query(frame.frame_id, region);
    std::erase_if(hits, [&](const DetectionRecord& r) { return r.confidence < cfg.confirmation_threshold; });
    return hits;
  };

  // Stage 1: threshold and associate.
  const std::vector<DetectionRecord> dets = above_threshold(frame, cfg.primary_threshold);
  std::vector<BoundingBox> det_boxes;
  for (const auto& d : dets) det_boxes.push_back(d.box);
  std::vector<TrackRef> refs;
  for (const auto& t : state.tracks) refs.push_back({t.track_id, t.box_history.back().box});

  std::vector<FrameWork> work(state.tracks.size());
  for (std::size_t k = 0; k < state.tracks.size(); ++k) {
    work[k].prev_cl = state.tracks[k].cl;
    work[k].was_temporal = state.tracks[k].temporal_active;
  }
  std::vector<bool> det_used(dets.size(), false);
  for (const auto& a : greedy_associate(det_boxes, refs, cfg.association_iou)) {
    work[a.track].detection = dets[a.detection];
    det_used[a.detection] = true;
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (det_used[d]) continue;
    TrackState t;
    t.track_id = state.next_track_id++;
    t.cl = ConfirmationLevel::kOne;
    t.last_tag = std::string(tags::kPossible);
    t.box = dets[d].box;
    state.tracks.push_back(std::move(t));
    FrameWork w;
    w.detection = dets[d];
    w.is_new = true;
    w.prev_cl = ConfirmationLevel::kZero;
    work.push_back(std::move(w));
  }

  // Stage 2: spatial confirmation of every detected track.
  for (std::size_t k = 0; k < state.tracks.size(); ++k) {
    TrackState& t = state.tracks[k];
    FrameWork& w = work[k];
    if (!w.detection) continue;
    const BoundingBox& det = w.detection->box;
    const bool confirmed = !query(padded_crop(det, cfg.crop_pad, dims)).empty();
    t.spatial_confirm_streak = confirmed ? t.spatial_confirm_streak + 1 : 0;
    t.fading = false;
    t.last_evidence_frame = frame.frame_id;

    int target = 1;
    if (confirmed) target = 2;
    if (t.spatial_confirm_streak >= cfg.spatial_streak_required) target = 3;
    // New tracks top out at 2; existing ones rise by at most one level.
    const int cap = w.is_new ? 2 : value(w.prev_cl) + 1;
    t.cl = std::max(t.cl, confirmation_level(std::min(target, cap)));
    if (!w.was_temporal) {
      t.last_tag = std::string(tag_for(t.cl));
      t.box = det;
      t.stage = Stage::stage1;
      w.history_box = det;
    }
  }

  // Stage 3: temporal confirmation and recovery for tracks already active.
  for (std::size_t k = 0; k < state.tracks.size(); ++k) {
    TrackState& t = state.tracks[k];
    FrameWork& w = work[k];
    if (!w.was_temporal) continue;
    if (predictor == nullptr) throw ConfigError("temporal confirmation needs a trajectory predictor");

    const auto hist = static_cast<std::size_t>(cfg.history_length);
    std::vector<BoundingBox> recent;
    for (std::size_t j = t.box_history.size() - hist; j < t.box_history.size(); ++j) {
      recent.push_back(normalize(clamp_to_frame(t.box_history[j].box, dims), dims));
    }
    const BoundingBox predicted = denormalize(predictor->predict(recent), dims);

    if (w.detection && iou(predicted, w.detection->box) >= cfg.prediction_match_iou) {
      t.last_tag = std::string(tags::kConfirmed);
      t.recovery_attempts = 0;
      t.box = w.detection->box;
      t.stage = Stage::stage1;
      w.history_box = w.detection->box;
      continue;
    }
    const auto hits = query(padded_crop(predicted, cfg.crop_pad, dims));
    if (!hits.empty()) {
      const DetectionRecord& hit = best_hit(hits, predicted);
      t.last_tag = std::string(tags::kRecovered);
      t.recovery_attempts = 0;
      t.box = hit.box;
      t.stage = Stage::stage2;
      t.last_evidence_frame = frame.frame_id;
      w.history_box = hit.box;
      w.recovered = true;
      continue;
    }
    ++t.recovery_attempts;
    t.box = predicted;
    t.stage = Stage::predicted;
    w.history_box = predicted;
    if (t.recovery_attempts >= cfg.recovery_window) {
      t.cl = ConfirmationLevel::kZero;
      t.last_tag = std::string(tags::kFading);
      t.temporal_active = false;
      t.fading = true;
      t.spatial_confirm_streak = 0;
      t.recovery_attempts = 0;
      t.last_evidence_frame = frame.frame_id;
      w.faded = true;
    } else {
      t.last_tag = std::string(tags::kConfirmed);
    }
  }

  // Unseen tracks below CL 3 fade; history, activation and retirement.
  std::vector<Event> events;
  std::vector<TrackState> live;
  std::vector<Event> retired;
  for (std::size_t k = 0; k < state.tracks.size(); ++k) {
    TrackState& t = state.tracks[k];
    FrameWork& w = work[k];
    if (!w.detection && !t.temporal_active && !w.faded) {
      if (t.cl != ConfirmationLevel::kZero) {
        t.cl = ConfirmationLevel::kZero;
        t.fading = true;
        w.faded = true;
      }
      t.spatial_confirm_streak = 0;
      t.last_tag = std::string(tags::kFading);
      t.stage = Stage::held;
    }
    if (w.history_box) {
      t.box_history.push_back({frame.frame_id, *w.history_box});
      if (t.box_history.size() > history_cap) t.box_history.erase(t.box_history.begin());
    }
    if (t.cl == ConfirmationLevel::kThree && !t.temporal_active &&
        t.box_history.size() >= static_cast<std::size_t>(cfg.history_length)) {
      if (predictor == nullptr) throw ConfigError("temporal confirmation needs a trajectory predictor");
      t.temporal_active = true;
      t.recovery_attempts = 0;
    }

    const BoundingBox ev_box = t.box;
    if (w.is_new) {
      events.push_back({frame.frame_id, t.track_id, EventKind::spawn, ConfirmationLevel::kOne,
                        std::string(tags::kPossible), ev_box});
    }
    const ConfirmationLevel before = w.is_new ? ConfirmationLevel::kOne : w.prev_cl;
    if (t.cl != before) {
      events.push_back({frame.frame_id, t.track_id, EventKind::cl_change, t.cl, t.last_tag, ev_box});
    }
    if (t.cl == ConfirmationLevel::kThree && w.prev_cl != ConfirmationLevel::kThree) {
      events.push_back({frame.frame_id, t.track_id, EventKind::alarm, t.cl, t.last_tag, ev_box});
    }
    if (w.recovered) {
      events.push_back({frame.frame_id, t.track_id, EventKind::recovered, t.cl, t.last_tag, ev_box});
    }
    if (w.faded) {
      events.push_back({frame.frame_id, t.track_id, EventKind::fading, t.cl, t.last_tag, ev_box});
    }

    const bool stale = frame.frame_id - t.last_evidence_frame >= cfg.history_length;
    if (!t.temporal_active && !w.detection && stale) {
      retired.push_back({frame.frame_id, t.track_id, EventKind::retired, t.cl, t.last_tag, ev_box});
      continue;
    }
    live.push_back(std::move(t));
  }
  events.insert(events.end(), retired.begin(), retired.end());
  state.tracks = std::move(live);

  FrameOutcome outcome;
  outcome.frame_id = frame.frame_id;
  for (const auto& t : state.tracks) {
    outcome.tracks.push_back({t.track_id, t.cl, t.last_tag, t.box, t.stage});
  }
  std::tie(outcome.level, outcome.message) = global_alarm(outcome.tracks);
  outcome.alarm_triggered = std::any_of(events.begin(), events.end(),
                                        [](const Event& e) { return e.kind == EventKind::alarm; });
  return {std::move(state), std::move(outcome), std::move(events)};
}

std::size_t VideoRun::alarm_count() const { return multicast::alarm_count(outcomes); }

std::size_t alarm_count(const std::vector<FrameOutcome>& outcomes) {
  return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                [](const FrameOutcome& o) { return o.alarm_triggered; }));
}

VideoRun run_frames(const DetectionLog& primary, const ConfirmationDetector& confirm,
                    const TrajectoryPredictor* predictor, const PipelineConfig& cfg) {
  cfg.validate();
  VideoRun run;
  PipelineState state;
  for (const auto& frame : primary.frames) {
    StepResult r = step(std::move(state), frame, confirm, predictor, cfg);
    state = std::move(r.state);
    run.outcomes.push_back(std::move(r.outcome));
    run.events.insert(run.events.end(), r.events.begin(), r.events.end());
  }
  return run;
}

VideoRun run_video(const DetectionLog& primary, const DetectionLog& confirmation,
                   const TrajectoryPredictor* predictor, const PipelineConfig& cfg) {
  if (!(primary.range == confirmation.range)) {
    throw ValidationError("primary and confirmation logs cover different frame ranges");
  }
  if (!(primary.dims == confirmation.dims)) {
    throw ValidationError("primary and confirmation logs have different frame dims");
  }
  const ReplayConfirmationDetector replay(confirmation, cfg.confirmation_threshold);
  return run_frames(primary, replay, predictor, cfg);
}

std::vector<FrameOutcome> baseline_single_detector(const DetectionLog& primary,
                                                   const PipelineConfig& cfg) {
  std::vector<FrameOutcome> out;
  for (const auto& frame : primary.frames) {
    FrameOutcome o;
    o.frame_id = frame.frame_id;
    std::int64_t idx = 0;
    for (const auto& d : above_threshold(frame, cfg.primary_threshold)) {
      o.tracks.push_back({idx++, ConfirmationLevel::kThree, std::string(tags::kConfirmed), d.box,
                          Stage::stage1});
    }
    std::tie(o.level, o.message) = global_alarm(o.tracks);
    o.alarm_triggered = !o.tracks.empty();
    out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event and outcome logs.

void write_event_log(const std::vector<Event>& events, std::ostream& out) {
  out << "# frame_id, track_id, event, cl, tag, x1, y1, x2, y2\n";
  for (const auto& e : events) {
    out << e.frame_id << ", " << e.track_id << ", " << to_string(e.kind) << ", " << value(e.cl)
        << ", " << e.tag << ", " << format_number(e.box.x1) << ", " << format_number(e.box.y1)
        << ", " << format_number(e.box.x2) << ", " << format_number(e.box.y2) << "\n";
  }
  if (!out) throw IoError("event log write failure");
}

namespace {

template <typename T>
T parse_field(const std::string& s, std::size_t line) {
  T v{};
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(line, "bad numeric field '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::vector<Event> parse_event_log(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> f;
    std::istringstream is(t);
    std::string part;
    while (std::getline(is, part, ',')) f.push_back(trim(part));
    if (f.size() != 9) throw ParseError(line_no, "expected 9 event fields");
    try {
      Event e;
      e.frame_id = parse_field<std::int64_t>(f[0], line_no);
      e.track_id = parse_field<std::int64_t>(f[1], line_no);
      e.kind = event_kind_from_string(f[2]);
      e.cl = confirmation_level(parse_field<int>(f[3], line_no));
      e.tag = f[4];
      e.box = {parse_field<double>(f[5], line_no), parse_field<double>(f[6], line_no),
               parse_field<double>(f[7], line_no), parse_field<double>(f[8], line_no)};
      out.push_back(std::move(e));
    } catch (const ContractError& err) {
      throw ParseError(line_no, err.what());
    }
  }
  return out;
}

void write_outcome_log(const std::vector<FrameOutcome>& outcomes, std::ostream& out) {
  for (const auto& o : outcomes) {
    nlohmann::json tracks = nlohmann::json::array();
    for (const auto& t : o.tracks) {
      tracks.push_back({{"id", t.track_id},
                        {"cl", value(t.cl)},
                        {"tag", t.tag},
                        {"stage", std::string(to_string(t.stage))},
                        {"box", {t.box.x1, t.box.y1, t.box.x2, t.box.y2}}});
    }
    nlohmann::json j = {{"frame", o.frame_id},
                        {"level", std::string(to_string(o.level))},
                        {"message", o.message},
                        {"alarm", o.alarm_triggered},
                        {"tracks", std::move(tracks)}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("outcome log write failure");
}

std::vector<FrameOutcome> parse_outcome_log(std::istream& in) {
  std::vector<FrameOutcome> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FrameOutcome o;
      o.frame_id = j.at("frame").get<std::int64_t>();
      o.level = alarm_level_from_string(j.at("level").get<std::string>());
      o.message = j.at("message").get<std::string>();
      o.alarm_triggered = j.at("alarm").get<bool>();
      for (const auto& t : j.at("tracks")) {
        const auto& b = t.at("box");
        o.tracks.push_back({t.at("id").get<std::int64_t>(), confirmation_level(t.at("cl").get<int>()),
                            t.at("tag").get<std::string>(),
                            BoundingBox{b.at(0).get<double>(), b.at(1).get<double>(),
                                        b.at(2).get<double>(), b.at(3).get<double>()},
                            stage_from_string(t.at("stage").get<std::string>())});
      }
      if (!out.empty() && o.frame_id <= out.back().frame_id) {
        throw OrderingError("line " + std::to_string(line_no) + ": frames out of order");
      }
      out.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ContractError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::vector<FrameOutcome> read_outcome_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_outcome_log(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  }
}

}  // namespace multicast
