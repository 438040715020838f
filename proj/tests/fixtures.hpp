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

#include <cmath>
#include <string>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/random.hpp"
#include "multicast/scenario.hpp"

namespace fixtures {

using namespace multicast;

// Coordinates of mixed precision: integers, short decimals and full doubles.
inline double random_coord(Rng& rng, double lo, double hi) {
  const double v = rng.uniform(lo, hi);
  switch (rng.below(3)) {
    case 0: return std::floor(v);
    case 1: return std::round(v * 1000.0) / 1000.0;
    default: return v;
  }
}

inline DetectionLog random_log(Rng& rng, bool with_confidence = true) {
  const FrameDims dims{static_cast<int>(64 + rng.below(1200)), static_cast<int>(48 + rng.below(900))};
  const std::int64_t lo = static_cast<std::int64_t>(rng.below(50));
  const FrameRange range{lo, lo + static_cast<std::int64_t>(rng.below(30))};
  static const std::vector<std::string> labels{"handgun", "pistol", "knife", "Handgun_2"};
  std::vector<DetectionRecord> records;
  for (std::int64_t f = range.lo; f < range.hi; ++f) {
    const auto n = rng.below(4);
    for (std::uint64_t k = 0; k < n; ++k) {
      DetectionRecord r;
      r.frame_id = f;
      const double x1 = random_coord(rng, 0.0, dims.width - 2.0);
      const double y1 = random_coord(rng, 0.0, dims.height - 2.0);
      r.box = {x1, y1, x1 + 1.0 + random_coord(rng, 0.0, 200.0), y1 + 1.0 + random_coord(rng, 0.0, 200.0)};
      r.class_label = labels[rng.below(labels.size())];
      r.confidence = with_confidence ? (rng.below(5) == 0 ? 1.0 : random_coord(rng, 0.0, 1.0)) : 1.0;
      records.push_back(r);
    }
  }
  return make_dense_log(range, dims, records);
}

inline ScenarioSpec static_object_spec(std::int64_t frames, BoundingBox box = {200, 150, 260, 200}) {
  ScenarioSpec s;
  s.frame_count = frames;
  TrueObject o;
  o.keyframes = {{0, box}};
  o.visible = FrameRange{0, frames};
  s.objects.push_back(o);
  return s;
}

inline ScenarioSpec moving_object_spec(std::int64_t frames, BoundingBox from, BoundingBox to) {
  ScenarioSpec s;
  s.frame_count = frames;
  TrueObject o;
  o.keyframes = {{0, from}, {frames - 1, to}};
  o.visible = FrameRange{0, frames};
  s.objects.push_back(o);
  return s;
}

}  // namespace fixtures
