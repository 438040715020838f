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

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "multicast/config.hpp"
#include "multicast/statemachine.hpp"
#include "multicast/trajectory.hpp"

// Run manifest grammar (see config.hpp for the file syntax):
//
//   [run]
//   predictor = linear | lstm:<model path>
//   spatial_streak_required = 5      # any PipelineConfig field
//
//   [video <id>]
//   primary = <detection log>
//   confirmation = <detection log>
//   ground_truth = <detection log>   # optional
//   gt_alarm = 0 | 1                 # optional
//   dims = 640x480                   # optional, for logs without a header
//
// Relative paths resolve against the manifest's directory.
namespace multicast {

struct PredictorSpec {
  enum class Kind { linear, lstm } kind = Kind::linear;
  std::filesystem::path model_path;
};

PredictorSpec parse_predictor_spec(const std::string& text);
std::string to_string(const PredictorSpec& spec);

// Builds the predictor; loads the model file for `lstm`.
std::unique_ptr<TrajectoryPredictor> make_predictor(const PredictorSpec& spec);

struct VideoEntry {
  std::string id;
  std::filesystem::path primary;
  std::filesystem::path confirmation;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<bool> gt_alarm;
  std::optional<FrameDims> dims;
};

struct RunManifest {
  PipelineConfig config;
  PredictorSpec predictor;
  std::vector<VideoEntry> videos;
};

// Applies one `key = value` override; throws ParseError for unknown keys.
void apply_override(PipelineConfig& cfg, const config::Entry& e);

// Throws ParseError for syntax or unknown keys, ValidationError for duplicate
// video ids and IoError naming the first referenced file that does not exist.
RunManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
RunManifest read_manifest(const std::filesystem::path& path);

void write_manifest(const RunManifest& m, std::ostream& out);

struct LoadedVideo {
  std::string id;
  DetectionLog primary;
  DetectionLog confirmation;
  std::optional<DetectionLog> ground_truth;
};

// Parses the entry's logs; errors carry the file path.
LoadedVideo load_video(const VideoEntry& entry);

}  // namespace multicast
