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

#include "multicast/manifest.hpp"

#include <fstream>
#include <ostream>
#include <set>

#include "multicast/errors.hpp"

namespace multicast {

PredictorSpec parse_predictor_spec(const std::string& text) {
  if (text == "linear") return {PredictorSpec::Kind::linear, {}};
  constexpr std::string_view prefix = "lstm:";
  if (text.starts_with(prefix) && text.size() > prefix.size()) {
    return {PredictorSpec::Kind::lstm, text.substr(prefix.size())};
  }
  throw ConfigError("predictor must be 'linear' or 'lstm:<path>', got '" + text + "'");
}

std::string to_string(const PredictorSpec& spec) {
  if (spec.kind == PredictorSpec::Kind::linear) return "linear";
  return "lstm:" + spec.model_path.string();
}

std::unique_ptr<TrajectoryPredictor> make_predictor(const PredictorSpec& spec) {
  if (spec.kind == PredictorSpec::Kind::linear) return std::make_unique<LinearExtrapolator>();
  return std::make_unique<TrajectoryModel>(load_model(spec.model_path));
}

void apply_override(PipelineConfig& cfg, const config::Entry& e) {
  if (e.key == "primary_threshold") cfg.primary_threshold = config::to_double(e);
  else if (e.key == "confirmation_threshold") cfg.confirmation_threshold = config::to_double(e);
  else if (e.key == "spatial_streak_required") cfg.spatial_streak_required = static_cast<int>(config::to_int(e));
  else if (e.key == "history_length") cfg.history_length = static_cast<int>(config::to_int(e));
  else if (e.key == "recovery_window") cfg.recovery_window = static_cast<int>(config::to_int(e));
  else if (e.key == "prediction_match_iou") cfg.prediction_match_iou = config::to_double(e);
  else if (e.key == "association_iou") cfg.association_iou = config::to_double(e);
  else if (e.key == "crop_pad") cfg.crop_pad = config::to_double(e);
  else throw ParseError(e.line, "unknown key '" + e.key + "'");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw IoError("missing file " + p.string());
}

}  // namespace

RunManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  RunManifest m;
  std::set<std::string> ids;
  for (const auto& sec : config::parse(in)) {
    if (sec.name == "run") {
      for (const auto& e : sec.entries) {
        if (e.key == "predictor") {
          try {
            m.predictor = parse_predictor_spec(e.value);
          } catch (const ConfigError& err) {
            throw ParseError(e.line, err.what());
          }
          if (m.predictor.kind == PredictorSpec::Kind::lstm) {
            m.predictor.model_path = resolve(base_dir, m.predictor.model_path.string());
          }
        } else {
          apply_override(m.config, e);
        }
      }
    } else if (sec.name == "video") {
      sec.expect_keys({"primary", "confirmation", "ground_truth", "gt_alarm", "dims"});
      if (sec.argument.empty()) throw ParseError(sec.line, "[video] needs an id");
      if (!ids.insert(sec.argument).second) {
        throw ValidationError("duplicate video id '" + sec.argument + "'");
      }
      VideoEntry v;
      v.id = sec.argument;
      const auto* primary = sec.find("primary");
      const auto* confirmation = sec.find("confirmation");
      if (primary == nullptr) throw ParseError(sec.line, "video '" + v.id + "' has no primary log");
      if (confirmation == nullptr) {
        throw ParseError(sec.line, "video '" + v.id + "' has no confirmation log");
      }
      v.primary = resolve(base_dir, primary->value);
      v.confirmation = resolve(base_dir, confirmation->value);
      if (const auto* e = sec.find("ground_truth")) v.ground_truth = resolve(base_dir, e->value);
      if (const auto* e = sec.find("gt_alarm")) v.gt_alarm = config::to_bool(*e);
      if (const auto* e = sec.find("dims")) v.dims = config::to_dims(*e);
      m.videos.push_back(std::move(v));
    } else {
      throw ParseError(sec.line, "unknown section [" + sec.name + "]");
    }
  }
  try {
    m.config.validate();
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  if (m.predictor.kind == PredictorSpec::Kind::lstm) require_file(m.predictor.model_path);
  for (const auto& v : m.videos) {
    require_file(v.primary);
    require_file(v.confirmation);
    if (v.ground_truth) require_file(*v.ground_truth);
  }
  return m;
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_manifest(in, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  }
}

void write_manifest(const RunManifest& m, std::ostream& out) {
  const PipelineConfig defaults;
  out << "[run]\npredictor = " << to_string(m.predictor) << "\n";
  auto num = [&](const char* key, double v, double d) {
    if (v != d) out << key << " = " << format_number(v) << "\n";
  };
  num("primary_threshold", m.config.primary_threshold, defaults.primary_threshold);
  num("confirmation_threshold", m.config.confirmation_threshold, defaults.confirmation_threshold);
  num("spatial_streak_required", m.config.spatial_streak_required, defaults.spatial_streak_required);
  num("history_length", m.config.history_length, defaults.history_length);
  num("recovery_window", m.config.recovery_window, defaults.recovery_window);
  num("prediction_match_iou", m.config.prediction_match_iou, defaults.prediction_match_iou);
  num("association_iou", m.config.association_iou, defaults.association_iou);
  num("crop_pad", m.config.crop_pad, defaults.crop_pad);
  for (const auto& v : m.videos) {
    out << "\n[video " << v.id << "]\nprimary = " << v.primary.string()
        << "\nconfirmation = " << v.confirmation.string() << "\n";
    if (v.ground_truth) out << "ground_truth = " << v.ground_truth->string() << "\n";
    if (v.gt_alarm) out << "gt_alarm = " << (*v.gt_alarm ? 1 : 0) << "\n";
    if (v.dims) out << "dims = " << v.dims->width << "x" << v.dims->height << "\n";
  }
  if (!out) throw IoError("manifest write failure");
}

namespace {

// Logs without a frames header only list frames that have records; fill the
// gaps so every frame in the span is stepped.
DetectionLog read_dense(const std::filesystem::path& path, const ParseOptions& opts) {
  DetectionLog log = read_detection_log(path, opts);
  if (static_cast<std::int64_t>(log.frames.size()) == log.range.size()) return log;
  std::vector<DetectionRecord> records;
  for (auto& f : log.frames) {
    for (auto& r : f.detections) records.push_back(std::move(r));
  }
  return make_dense_log(log.range, log.dims, records);
}

}  // namespace

LoadedVideo load_video(const VideoEntry& entry) {
  ParseOptions opts;
  opts.dims = entry.dims;
  LoadedVideo v;
  v.id = entry.id;
  v.primary = read_dense(entry.primary, opts);
  v.confirmation = read_dense(entry.confirmation, opts);
  if (entry.ground_truth) v.ground_truth = read_dense(*entry.ground_truth, opts);
  return v;
}

}  // namespace multicast
