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
#include <span>
#include <string>
#include <vector>

#include "multicast/geometry.hpp"

namespace multicast {

// One detector output line.
struct DetectionRecord {
  std::int64_t frame_id = 0;
  BoundingBox box;
  std::string class_label = "handgun";
  double confidence = 1.0;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct FrameDetections {
  std::int64_t frame_id = 0;
  std::vector<DetectionRecord> detections;
  FrameDims dims;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

// Half-open frame id range [lo, hi).
struct FrameRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  std::int64_t size() const { return hi > lo ? hi - lo : 0; }
  bool contains(std::int64_t f) const { return f >= lo && f < hi; }

  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

// A parsed detection log. When the header declares a frame range, `frames`
// holds one entry per id in the range (empty frames included).
struct DetectionLog {
  FrameRange range;
  FrameDims dims;
  std::vector<FrameDetections> frames;

  // Records of `frame_id`, or nullptr when the log has no entry for it.
  const FrameDetections* find(std::int64_t frame_id) const;
  std::size_t record_count() const;

  friend bool operator==(const DetectionLog&, const DetectionLog&) = default;
};

// Builds a dense log (one FrameDetections per id in `range`) from records.
// Throws ContractError for records outside the range.
DetectionLog make_dense_log(FrameRange range, FrameDims dims,
                            std::span<const DetectionRecord> records);

enum class DetectorRole { primary_detector, confirmation_detector };

inline constexpr double kPrimaryThreshold = 0.1;
inline constexpr double kConfirmationThreshold = 0.3;

double default_threshold(DetectorRole role);

// Records of `frame` whose confidence is at least `threshold`.
std::vector<DetectionRecord> above_threshold(const FrameDetections& frame, double threshold);

struct ParseOptions {
  // Used when the log carries no `dims` header; required for top-left input.
  std::optional<FrameDims> dims;
  // Source boxes use a top-left origin and get flipped on read.
  bool top_left_origin = false;
};

// Line format: `frame_id, x1, y1, x2, y2, class[, confidence]`, with an
// optional header `# frames <lo>..<hi> dims <w>x<h>`. Commas and whitespace
// are both accepted as delimiters; a missing confidence reads as 1.0.
DetectionLog parse_detection_log(std::istream& in, const ParseOptions& opts = {});
DetectionLog read_detection_log(const std::filesystem::path& path, const ParseOptions& opts = {});

struct WriteOptions {
  // Ground-truth logs omit the confidence column.
  bool with_confidence = true;
};

void write_detection_log(const DetectionLog& log, std::ostream& out, const WriteOptions& opts = {});
void save_detection_log(const DetectionLog& log, const std::filesystem::path& path,
                        const WriteOptions& opts = {});
std::string format_detection_log(const DetectionLog& log, const WriteOptions& opts = {});

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

// Second-stage detector consulted on image regions.
class ConfirmationDetector {
 public:
  virtual ~ConfirmationDetector() = default;

  // Above-threshold detections of `frame_id` that overlap `region` and have
  // their center inside it. Unknown frames yield an empty list.
  virtual std::vector<DetectionRecord> region_query(std::int64_t frame_id,
                                                    const BoundingBox& region) const = 0;
};

// Answers region queries from a pre-recorded confirmation-detector log.
class ReplayConfirmationDetector final : public ConfirmationDetector {
 public:
  explicit ReplayConfirmationDetector(DetectionLog log,
                                      double threshold = kConfirmationThreshold);

  std::vector<DetectionRecord> region_query(std::int64_t frame_id,
                                            const BoundingBox& region) const override;

  const DetectionLog& log() const { return log_; }
  double threshold() const { return threshold_; }

 private:
  DetectionLog log_;
  double threshold_;
};

// Confirmation detector that never sees anything.
class NullConfirmationDetector final : public ConfirmationDetector {
 public:
  std::vector<DetectionRecord> region_query(std::int64_t, const BoundingBox&) const override {
    return {};
  }
};

}  // namespace multicast
