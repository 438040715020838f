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

#include "multicast/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "multicast/config.hpp"
#include "multicast/errors.hpp"
#include "multicast/random.hpp"

namespace multicast {

namespace {

constexpr double kCropMargin = 0.5;

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

BoundingBox round_box(const BoundingBox& b) {
  return {round_to(b.x1, 1e3), round_to(b.y1, 1e3), round_to(b.x2, 1e3), round_to(b.y2, 1e3)};
}

bool interval_ok(const Interval& iv) {
  return iv.first >= 0.0 && iv.second <= 1.0 && iv.first <= iv.second;
}

bool inside_frame(const BoundingBox& b, const FrameDims& d) {
  return is_valid(b) && b.x2 <= d.width && b.y2 <= d.height;
}

bool affects_primary(DropoutTarget t) { return t != DropoutTarget::confirmation; }
bool affects_confirmation(DropoutTarget t) { return t != DropoutTarget::primary; }

FrameRange visible_range(const TrueObject& o) {
  if (o.visible) return *o.visible;
  return {o.keyframes.front().frame, o.keyframes.back().frame + 1};
}

const Dropout* dropout_for(const std::vector<Dropout>& dropouts, int object_id, std::int64_t f,
                           bool primary) {
  for (const auto& d : dropouts) {
    if (d.object_id != object_id || !d.frames.contains(f)) continue;
    if (primary ? affects_primary(d.target) : affects_confirmation(d.target)) return &d;
  }
  return nullptr;
}

// True-object boxes of one frame, already clamped and rounded.
std::vector<BoundingBox> truth_at(const ScenarioSpec& spec, std::int64_t f) {
  std::vector<BoundingBox> out;
  for (const auto& o : spec.objects) {
    if (auto b = object_box_at(o, f)) {
      const BoundingBox c = round_box(clamp_to_frame(*b, spec.dims));
      if (is_valid(c)) out.push_back(c);
    }
  }
  return out;
}

// A spurious box far enough from every true object that neither crop can
// pick up the other.
bool clear_of(const BoundingBox& fp, const std::vector<BoundingBox>& truth, const FrameDims& dims) {
  const BoundingBox fp_crop = padded_crop(fp, kCropMargin, dims);
  for (const auto& t : truth) {
    const BoundingBox t_crop = padded_crop(t, kCropMargin, dims);
    if (intersects(fp_crop, t_crop)) return false;
  }
  return true;
}

}  // namespace

std::optional<BoundingBox> object_box_at(const TrueObject& object, std::int64_t frame) {
  if (object.keyframes.empty() || !visible_range(object).contains(frame)) return std::nullopt;
  const auto& kf = object.keyframes;
  if (frame <= kf.front().frame) return kf.front().box;
  if (frame >= kf.back().frame) return kf.back().box;
  for (std::size_t i = 1; i < kf.size(); ++i) {
    if (frame <= kf[i].frame) {
      const auto& a = kf[i - 1];
      const auto& b = kf[i];
      const double t = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
      auto lerp = [t](double u, double v) { return u + t * (v - u); };
      return BoundingBox{lerp(a.box.x1, b.box.x1), lerp(a.box.y1, b.box.y1),
                         lerp(a.box.x2, b.box.x2), lerp(a.box.y2, b.box.y2)};
    }
  }
  return kf.back().box;
}

void validate(const ScenarioSpec& spec) {
  const FrameRange all{0, spec.frame_count};
  auto in_all = [&](const FrameRange& r) { return r.lo >= 0 && r.hi <= spec.frame_count && r.lo <= r.hi; };
  if (spec.frame_count < 0) throw ValidationError("frame count must be >= 0");
  if (!is_valid(spec.dims)) throw ValidationError("frame dims must be positive");

  std::set<int> ids;
  for (const auto& o : spec.objects) {
    const std::string who = "object " + std::to_string(o.id);
    if (!ids.insert(o.id).second) throw ValidationError("duplicate " + who);
    if (o.keyframes.empty()) throw ValidationError(who + " has no keyframes");
    for (std::size_t i = 0; i < o.keyframes.size(); ++i) {
      if (!all.contains(o.keyframes[i].frame)) throw ValidationError(who + " keyframe outside frames");
      if (!inside_frame(o.keyframes[i].box, spec.dims)) {
        throw ValidationError(who + " keyframe box outside the frame");
      }
      if (i > 0 && o.keyframes[i].frame <= o.keyframes[i - 1].frame) {
        throw ValidationError(who + " keyframes must be strictly increasing");
      }
    }
    if (o.visible && !in_all(*o.visible)) throw ValidationError(who + " visible range outside frames");
    if (!interval_ok(o.confidence) || !interval_ok(o.confirm_confidence)) {
      throw ValidationError(who + " confidence interval outside [0, 1]");
    }
    if (!(o.jitter >= 0.0)) throw ValidationError(who + " jitter must be >= 0");
  }

  for (const auto& fp : spec.intermittent_fps) {
    std::set<std::int64_t> seen;
    for (auto f : fp.frames) {
      if (!all.contains(f)) throw ValidationError("intermittent FP frame outside frames");
      if (!seen.insert(f).second) throw ValidationError("intermittent FP frame listed twice");
    }
    if (fp.count < 0 || fp.count > spec.frame_count) {
      throw ValidationError("intermittent FP count outside [0, frames]");
    }
    if (fp.box && !inside_frame(*fp.box, spec.dims)) {
      throw ValidationError("intermittent FP box outside the frame");
    }
    if (!fp.box && (fp.size.width <= 0 || fp.size.height <= 0 || fp.size.width >= spec.dims.width ||
                    fp.size.height >= spec.dims.height)) {
      throw ValidationError("intermittent FP size must fit in the frame");
    }
    if (!interval_ok(fp.confidence)) throw ValidationError("intermittent FP confidence outside [0, 1]");
  }

  for (const auto& fp : spec.persistent_fps) {
    if (!in_all(fp.frames)) throw ValidationError("persistent FP frames outside frames");
    if (!inside_frame(fp.box, spec.dims)) throw ValidationError("persistent FP box outside the frame");
    if (!interval_ok(fp.confidence)) throw ValidationError("persistent FP confidence outside [0, 1]");
  }

  for (std::size_t i = 0; i < spec.dropouts.size(); ++i) {
    const auto& d = spec.dropouts[i];
    if (!ids.count(d.object_id)) {
      throw ValidationError("dropout references unknown object " + std::to_string(d.object_id));
    }
    if (!in_all(d.frames)) throw ValidationError("dropout frames outside frames");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& e = spec.dropouts[j];
      const bool same_detector = (affects_primary(d.target) && affects_primary(e.target)) ||
                                 (affects_confirmation(d.target) && affects_confirmation(e.target));
      const bool overlap = d.frames.lo < e.frames.hi && e.frames.lo < d.frames.hi;
      if (e.object_id == d.object_id && same_detector && overlap) {
        throw ValidationError("contradictory overlapping dropouts on object " +
                              std::to_string(d.object_id));
      }
    }
  }
}

Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(spec.frame_count);
  std::vector<std::vector<DetectionRecord>> primary(n), confirm(n), truth(n);
  auto conf = [&](const Interval& iv) { return round_to(rng.uniform(iv.first, iv.second), 1e4); };

  for (std::int64_t f = 0; f < spec.frame_count; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    for (const auto& o : spec.objects) {
      auto raw = object_box_at(o, f);
      if (!raw) continue;
      const BoundingBox box = round_box(clamp_to_frame(*raw, spec.dims));
      if (!is_valid(box)) continue;
      truth[fi].push_back({f, box, spec.label, 1.0});

      if (const Dropout* d = dropout_for(spec.dropouts, o.id, f, true)) {
        if (d->low_confidence) {
          primary[fi].push_back({f, box, spec.label, conf({0.01, 0.09})});
        }
      } else {
        BoundingBox seen = box;
        if (o.jitter > 0.0) {
          seen.x1 += rng.uniform(-o.jitter, o.jitter);
          seen.y1 += rng.uniform(-o.jitter, o.jitter);
          seen.x2 += rng.uniform(-o.jitter, o.jitter);
          seen.y2 += rng.uniform(-o.jitter, o.jitter);
          seen = round_box(clamp_to_frame(seen, spec.dims));
          if (!is_valid(seen)) seen = box;
        }
        primary[fi].push_back({f, seen, spec.label, conf(o.confidence)});
      }

      if (const Dropout* d = dropout_for(spec.dropouts, o.id, f, false)) {
        if (d->low_confidence) {
          confirm[fi].push_back({f, box, spec.label, conf({0.01, 0.29})});
        }
      } else {
        confirm[fi].push_back({f, box, spec.label, conf(o.confirm_confidence)});
      }
    }
  }

  for (const auto& fp : spec.intermittent_fps) {
    std::vector<std::int64_t> frames = fp.frames;
    if (fp.count > 0) {
      std::vector<std::int64_t> pool;
      for (std::int64_t f = 0; f < spec.frame_count; ++f) pool.push_back(f);
      for (int k = 0; k < fp.count; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(k)));
        std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        frames.push_back(pool[static_cast<std::size_t>(k)]);
      }
    }
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

    for (auto f : frames) {
      const auto fi = static_cast<std::size_t>(f);
      BoundingBox box;
      if (fp.box) {
        box = *fp.box;
      } else {
        const auto t = truth_at(spec, f);
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
          const double x = rng.uniform(0.0, spec.dims.width - fp.size.width);
          const double y = rng.uniform(0.0, spec.dims.height - fp.size.height);
          box = round_box({x, y, x + fp.size.width, y + fp.size.height});
          placed = clear_of(box, t, spec.dims);
        }
        if (!placed) {
          throw ValidationError("cannot place intermittent FP clear of true objects at frame " +
                                std::to_string(f));
        }
      }
      primary[fi].push_back({f, box, spec.label, conf(fp.confidence)});
    }
  }

  for (const auto& fp : spec.persistent_fps) {
    for (std::int64_t f = fp.frames.lo; f < fp.frames.hi; ++f) {
      primary[static_cast<std::size_t>(f)].push_back({f, fp.box, spec.label, conf(fp.confidence)});
    }
  }

  auto flatten = [&](const std::vector<std::vector<DetectionRecord>>& per_frame) {
    std::vector<DetectionRecord> all;
    for (const auto& v : per_frame) all.insert(all.end(), v.begin(), v.end());
    return make_dense_log({0, spec.frame_count}, spec.dims, all);
  };
  return Scenario{flatten(primary), flatten(confirm), flatten(truth)};
}

namespace {

std::vector<Keyframe> parse_keyframes(const config::Entry& e) {
  std::vector<Keyframe> out;
  std::istringstream is(e.value);
  std::string item;
  while (std::getline(is, item, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParseError(e.line, "keyframes: expected <frame>: x1,y1,x2,y2");
    const config::Entry frame_part{e.key, item.substr(0, colon), e.line};
    const config::Entry box_part{e.key, item.substr(colon + 1), e.line};
    out.push_back({config::to_int(frame_part), config::to_box(box_part)});
  }
  return out;
}

}  // namespace

ScenarioSpec parse_scenario_spec(std::istream& in) {
  ScenarioSpec spec;
  bool have_header = false;
  for (const auto& s : config::parse(in)) {
    if (s.name == "scenario") {
      s.expect_keys({"frames", "dims", "label"});
      have_header = true;
      if (auto e = s.find("frames")) spec.frame_count = config::to_int(*e);
      if (auto e = s.find("dims")) spec.dims = config::to_dims(*e);
      if (auto e = s.find("label")) spec.label = e->value;
    } else if (s.name == "object") {
      s.expect_keys({"id", "keyframes", "visible", "confidence", "confirm_confidence", "jitter"});
      TrueObject o;
      o.id = static_cast<int>(spec.objects.size()) + 1;
      if (auto e = s.find("id")) o.id = static_cast<int>(config::to_int(*e));
      if (auto e = s.find("keyframes")) o.keyframes = parse_keyframes(*e);
      if (auto e = s.find("visible")) o.visible = config::to_range(*e);
      if (auto e = s.find("confidence")) o.confidence = config::to_interval(*e);
      if (auto e = s.find("confirm_confidence")) o.confirm_confidence = config::to_interval(*e);
      if (auto e = s.find("jitter")) o.jitter = config::to_double(*e);
      spec.objects.push_back(std::move(o));
    } else if (s.name == "intermittent_fp") {
      s.expect_keys({"frames", "count", "box", "size", "confidence"});
      IntermittentFp fp;
      if (auto e = s.find("frames")) fp.frames = config::to_int_list(*e);
      if (auto e = s.find("count")) fp.count = static_cast<int>(config::to_int(*e));
      if (auto e = s.find("box")) fp.box = config::to_box(*e);
      if (auto e = s.find("size")) fp.size = config::to_dims(*e);
      if (auto e = s.find("confidence")) fp.confidence = config::to_interval(*e);
      spec.intermittent_fps.push_back(std::move(fp));
    } else if (s.name == "persistent_fp") {
      s.expect_keys({"frames", "box", "confidence"});
      PersistentFp fp;
      const auto* frames = s.find("frames");
      const auto* box = s.find("box");
      if (!frames || !box) throw ParseError(s.line, "[persistent_fp] needs frames and box");
      fp.frames = config::to_range(*frames);
      fp.box = config::to_box(*box);
      if (auto e = s.find("confidence")) fp.confidence = config::to_interval(*e);
      spec.persistent_fps.push_back(fp);
    } else if (s.name == "dropout") {
      s.expect_keys({"object", "frames", "detector", "mode"});
      Dropout d;
      const auto* frames = s.find("frames");
      if (!frames) throw ParseError(s.line, "[dropout] needs frames");
      d.frames = config::to_range(*frames);
      if (auto e = s.find("object")) d.object_id = static_cast<int>(config::to_int(*e));
      if (auto e = s.find("detector")) {
        if (e->value == "primary") d.target = DropoutTarget::primary;
        else if (e->value == "confirmation") d.target = DropoutTarget::confirmation;
        else if (e->value == "both") d.target = DropoutTarget::both;
        else throw ParseError(e->line, "detector must be primary, confirmation or both");
      }
      if (auto e = s.find("mode")) {
        if (e->value == "miss") d.low_confidence = false;
        else if (e->value == "low_confidence") d.low_confidence = true;
        else throw ParseError(e->line, "mode must be miss or low_confidence");
      }
      spec.dropouts.push_back(d);
    } else {
      throw ParseError(s.line, "unknown section [" + s.name + "]");
    }
  }
  if (!have_header) throw ParseError(1, "missing [scenario] section");
  return spec;
}

ScenarioSpec read_scenario_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_scenario_spec(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  }
}

ScenarioConfirmationDetector::ScenarioConfirmationDetector(const ScenarioSpec& spec,
                                                           std::uint64_t seed, double threshold)
    : replay_(generate_scenario(spec, seed).confirmation, threshold) {}

std::vector<DetectionRecord> ScenarioConfirmationDetector::region_query(
    std::int64_t frame_id, const BoundingBox& region) const {
  return replay_.region_query(frame_id, region);
}

}  // namespace multicast
