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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/geometry.hpp"
#include "multicast/trajectory.hpp"

namespace multicast {

// How strongly the pipeline believes a track is a handgun.
enum class ConfirmationLevel : int { kZero = 0, kOne = 1, kTwo = 2, kThree = 3 };

inline int value(ConfirmationLevel cl) { return static_cast<int>(cl); }
ConfirmationLevel confirmation_level(int v);  // throws ContractError outside 0..3

enum class AlarmLevel { safe, low, elevated, high };

std::string_view to_string(AlarmLevel level);
AlarmLevel alarm_level_from_string(std::string_view s);

// Frame messages shown to the operator.
namespace tags {
inline constexpr std::string_view kSafeSpace = "Safe Space";
inline constexpr std::string_view kFading = "Handgun Fading";
inline constexpr std::string_view kPossible = "Possible Handgun";
inline constexpr std::string_view kDetected = "Handgun Detected";
inline constexpr std::string_view kConfirmed = "Handgun Confirmed";
inline constexpr std::string_view kRecovered = "Handgun Recovered";
}  // namespace tags

// Which stage produced the box reported for a track on a frame. `held` means
// nothing new was seen and the last known box is repeated.
enum class Stage { stage1, stage2, predicted, held };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct PipelineConfig {
  double primary_threshold = kPrimaryThreshold;
  double confirmation_threshold = kConfirmationThreshold;
  int spatial_streak_required = 5;
  int history_length = 5;
  int recovery_window = 5;
  double prediction_match_iou = 0.5;
  double association_iou = 0.3;
  double crop_pad = 0.25;

  // Throws ConfigError when a ratio is outside (0, 1] or a window is < 1.
  void validate() const;
};

struct HistoryEntry {
  std::int64_t frame_id = 0;
  BoundingBox box;
};

struct TrackState {
  std::int64_t track_id = 0;
  ConfirmationLevel cl = ConfirmationLevel::kOne;
  std::vector<HistoryEntry> box_history;  // oldest first, bounded
  int spatial_confirm_streak = 0;
  int recovery_attempts = 0;
  bool temporal_active = false;
  bool fading = false;
  std::string last_tag;
  // Last frame with stage-1 evidence or a recovery (or the fading frame).
  std::int64_t last_evidence_frame = 0;
  BoundingBox box;
  Stage stage = Stage::stage1;
};

struct PipelineState {
  std::vector<TrackState> tracks;  // ordered by track_id
  std::int64_t next_track_id = 1;
  std::optional<std::int64_t> last_frame;
};

struct TrackOutcome {
  std::int64_t track_id = 0;
  ConfirmationLevel cl = ConfirmationLevel::kZero;
  std::string tag;
  BoundingBox box;
  Stage stage = Stage::stage1;

  friend bool operator==(const TrackOutcome&, const TrackOutcome&) = default;
};

struct FrameOutcome {
  std::int64_t frame_id = 0;
  std::vector<TrackOutcome> tracks;
  AlarmLevel level = AlarmLevel::safe;
  std::string message{tags::kSafeSpace};
  // Some track reached CL 3 on this frame.
  bool alarm_triggered = false;

  friend bool operator==(const FrameOutcome&, const FrameOutcome&) = default;
};

enum class EventKind { spawn, cl_change, alarm, recovered, fading, retired };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct Event {
  std::int64_t frame_id = 0;
  std::int64_t track_id = 0;
  EventKind kind = EventKind::spawn;
  ConfirmationLevel cl = ConfirmationLevel::kZero;
  std::string tag;
  BoundingBox box;

  friend bool operator==(const Event&, const Event&) = default;
};

struct StepResult {
  PipelineState state;
  FrameOutcome outcome;
  std::vector<Event> events;
};

// Advances the pipeline by one frame: stage-1 association, spatial
// confirmation of every detected track, temporal confirmation and recovery
// of tracks already at CL 3, then fading, retirement and the global alarm
// level. Throws OrderingError for a frame id not after the previous one and
// ConfigError when a track needs the predictor and none is given.
StepResult step(PipelineState state, const FrameDetections& frame,
                const ConfirmationDetector& confirm, const TrajectoryPredictor* predictor,
                const PipelineConfig& cfg);

// Alarm level and message for a set of live tracks.
std::pair<AlarmLevel, std::string> global_alarm(const std::vector<TrackOutcome>& tracks);

struct VideoRun {
  std::vector<FrameOutcome> outcomes;
  std::vector<Event> events;

  std::size_t alarm_count() const;
  bool any_alarm() const { return alarm_count() > 0; }
};

// Folds step() over every frame of `primary`.
VideoRun run_frames(const DetectionLog& primary, const ConfirmationDetector& confirm,
                    const TrajectoryPredictor* predictor, const PipelineConfig& cfg);

// Replays both logs; throws ValidationError when their frame ranges or dims
// differ.
VideoRun run_video(const DetectionLog& primary, const DetectionLog& confirmation,
                   const TrajectoryPredictor* predictor, const PipelineConfig& cfg);

// Single-detector alarm system: every above-threshold detection is reported
// at CL 3 and raises the alarm on its frame.
std::vector<FrameOutcome> baseline_single_detector(const DetectionLog& primary,
                                                   const PipelineConfig& cfg);

std::size_t alarm_count(const std::vector<FrameOutcome>& outcomes);

// Event log: `frame_id, track_id, event, cl, tag, x1, y1, x2, y2` per line
// after a `#` header comment.
void write_event_log(const std::vector<Event>& events, std::ostream& out);
std::vector<Event> parse_event_log(std::istream& in);

// Frame-outcome log: one JSON object per frame.
void write_outcome_log(const std::vector<FrameOutcome>& outcomes, std::ostream& out);
std::vector<FrameOutcome> parse_outcome_log(std::istream& in);
std::vector<FrameOutcome> read_outcome_log(const std::filesystem::path& path);

}  // namespace multicast
