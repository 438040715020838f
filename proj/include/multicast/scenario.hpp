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
#include <utility>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/geometry.hpp"

namespace multicast {

using Interval = std::pair<double, double>;

struct Keyframe {
  std::int64_t frame = 0;
  BoundingBox box;
};

// A real handgun moving piecewise-linearly between keyframes. Outside the
// keyframe span the nearest keyframe box is held.
struct TrueObject {
  int id = 1;
  std::vector<Keyframe> keyframes;
  // Defaults to [first keyframe, last keyframe + 1).
  std::optional<FrameRange> visible;
  Interval confidence{0.6, 0.95};
  Interval confirm_confidence{0.5, 0.9};
  // Uniform +-jitter pixels added to each primary-detector coordinate.
  double jitter = 0.0;
};

// Spurious detections on isolated frames with a varying confidence.
// Occurs on every frame in `frames` plus `count` seeded random frames; at
// `box` when given, otherwise at a seeded random place of size `size`.
struct IntermittentFp {
  std::vector<std::int64_t> frames;
  int count = 0;
  std::optional<BoundingBox> box;
  FrameDims size{40, 40};
  Interval confidence{0.1, 0.6};
};

// Repeated spurious detection anchored on a real non-handgun object. The
// confirmation detector never reports it.
struct PersistentFp {
  FrameRange frames;
  BoundingBox box;
  Interval confidence{0.2, 0.6};
};

enum class DropoutTarget { primary, confirmation, both };

// Frames where a detector misses a true object (occlusion, light change,
// distance). With `low_confidence` the detector still reports the object
// but below its role threshold.
struct Dropout {
  int object_id = 1;
  FrameRange frames;
  DropoutTarget target = DropoutTarget::primary;
  bool low_confidence = false;
};

struct ScenarioSpec {
  std::int64_t frame_count = 0;
  FrameDims dims{640, 480};
  std::string label = "handgun";
  std::vector<TrueObject> objects;
  std::vector<IntermittentFp> intermittent_fps;
  std::vector<PersistentFp> persistent_fps;
  std::vector<Dropout> dropouts;
};

struct Scenario {
  DetectionLog primary;
  DetectionLog confirmation;
  DetectionLog ground_truth;
};

// Throws ValidationError on out-of-range or contradictory injections
// (overlapping dropouts of one object on a shared detector).
void validate(const ScenarioSpec& spec);

// Deterministic in (spec, seed).
Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

// Box of `object` at `frame`, before clamping; nullopt when not visible.
std::optional<BoundingBox> object_box_at(const TrueObject& object, std::int64_t frame);

ScenarioSpec parse_scenario_spec(std::istream& in);
ScenarioSpec read_scenario_spec(const std::filesystem::path& path);

// Confirmation detector that replays the confirmation stream of a generated
// scenario.
class ScenarioConfirmationDetector final : public ConfirmationDetector {
 public:
  ScenarioConfirmationDetector(const ScenarioSpec& spec, std::uint64_t seed,
                               double threshold = kConfirmationThreshold);

  std::vector<DetectionRecord> region_query(std::int64_t frame_id,
                                            const BoundingBox& region) const override;

 private:
  ReplayConfirmationDetector replay_;
};

}  // namespace multicast
