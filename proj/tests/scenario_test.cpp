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

#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "multicast/config.hpp"
#include "multicast/errors.hpp"
#include "multicast/scenario.hpp"

using namespace multicast;

namespace {

std::vector<BoundingBox> boxes_of(const DetectionLog& log) {
  std::vector<BoundingBox> out;
  for (const auto& f : log.frames) {
    for (const auto& d : f.detections) out.push_back(d.box);
  }
  return out;
}

}  // namespace

TEST(Scenario, StaticObjectPrimaryEqualsGroundTruth) {
  const auto sc = generate_scenario(fixtures::static_object_spec(20), 1);
  EXPECT_EQ(sc.primary.record_count(), 20u);
  EXPECT_EQ(boxes_of(sc.primary), boxes_of(sc.ground_truth));
  for (const auto& f : sc.primary.frames) {
    for (const auto& d : f.detections) {
      EXPECT_GE(d.confidence, 0.6);
      EXPECT_LE(d.confidence, 0.95);
    }
  }
  EXPECT_EQ(sc.confirmation.record_count(), 20u);
}

TEST(Scenario, IsolatedIntermittentFpAddsOneRecord) {
  auto spec = fixtures::static_object_spec(20);
  IntermittentFp fp;
  fp.frames = {7};
  fp.box = BoundingBox{500, 400, 540, 440};
  spec.intermittent_fps.push_back(fp);
  const auto base = generate_scenario(fixtures::static_object_spec(20), 4);
  const auto sc = generate_scenario(spec, 4);
  EXPECT_EQ(sc.primary.record_count(), base.primary.record_count() + 1);
  EXPECT_EQ(sc.confirmation, base.confirmation);
  const ReplayConfirmationDetector det(sc.confirmation);
  EXPECT_TRUE(det.region_query(7, {490, 390, 550, 450}).empty());
}

TEST(Scenario, RandomIntermittentFpsAvoidTrueObject) {
  auto spec = fixtures::static_object_spec(100);
  IntermittentFp fp;
  fp.count = 30;
  spec.intermittent_fps.push_back(fp);
  const auto sc = generate_scenario(spec, 8);
  EXPECT_EQ(sc.primary.record_count(), 130u);
  const BoundingBox obj{200, 150, 260, 200};
  for (const auto& f : sc.primary.frames) {
    for (const auto& d : f.detections) {
      if (d.box == obj) continue;
      EXPECT_EQ(iou(d.box, obj), 0.0);
      EXPECT_GE(d.confidence, 0.1);
    }
  }
}

TEST(Scenario, SameSeedSameBytes) {
  auto spec = fixtures::moving_object_spec(60, {10, 10, 50, 40}, {400, 300, 440, 330});
  spec.objects[0].jitter = 2.0;
  IntermittentFp fp;
  fp.count = 10;
  spec.intermittent_fps.push_back(fp);
  const auto a = generate_scenario(spec, 77);
  const auto b = generate_scenario(spec, 77);
  EXPECT_EQ(format_detection_log(a.primary), format_detection_log(b.primary));
  EXPECT_EQ(format_detection_log(a.confirmation), format_detection_log(b.confirmation));
  EXPECT_EQ(format_detection_log(a.ground_truth), format_detection_log(b.ground_truth));
  const auto c = generate_scenario(spec, 78);
  EXPECT_NE(format_detection_log(a.primary), format_detection_log(c.primary));
}

TEST(Scenario, PersistentFpIsNeverConfirmed) {
  ScenarioSpec spec;
  spec.frame_count = 30;
  spec.persistent_fps.push_back({{0, 30}, {100, 100, 140, 160}, {0.2, 0.6}});
  const auto sc = generate_scenario(spec, 3);
  EXPECT_EQ(sc.primary.record_count(), 30u);
  const ScenarioConfirmationDetector det(spec, 3);
  for (std::int64_t f = 0; f < 30; ++f) {
    EXPECT_TRUE(det.region_query(f, padded_crop({100, 100, 140, 160}, 0.25, spec.dims)).empty());
  }
}

TEST(Scenario, DropoutRemovesDetections) {
  auto spec = fixtures::static_object_spec(20);
  spec.dropouts.push_back({1, {5, 8}, DropoutTarget::primary, false});
  spec.dropouts.push_back({1, {10, 12}, DropoutTarget::both, true});
  const auto sc = generate_scenario(spec, 2);
  for (std::int64_t f = 5; f < 8; ++f) {
    EXPECT_TRUE(sc.primary.find(f)->detections.empty());
    EXPECT_EQ(sc.confirmation.find(f)->detections.size(), 1u);
  }
  for (std::int64_t f = 10; f < 12; ++f) {
    ASSERT_EQ(sc.primary.find(f)->detections.size(), 1u);
    EXPECT_LT(sc.primary.find(f)->detections[0].confidence, kPrimaryThreshold);
    ASSERT_EQ(sc.confirmation.find(f)->detections.size(), 1u);
    EXPECT_LT(sc.confirmation.find(f)->detections[0].confidence, kConfirmationThreshold);
  }
  EXPECT_EQ(sc.ground_truth.record_count(), 20u);
}

TEST(Scenario, ContradictoryInjectionsRejected) {
  auto spec = fixtures::static_object_spec(20);
  spec.dropouts.push_back({1, {5, 8}, DropoutTarget::primary, false});
  spec.dropouts.push_back({1, {7, 9}, DropoutTarget::both, false});
  EXPECT_THROW(validate(spec), ValidationError);
  EXPECT_THROW(generate_scenario(spec, 0), ValidationError);

  auto unknown = fixtures::static_object_spec(20);
  unknown.dropouts.push_back({2, {5, 8}, DropoutTarget::primary, false});
  EXPECT_THROW(validate(unknown), ValidationError);

  auto outside = fixtures::static_object_spec(20);
  IntermittentFp fp;
  fp.frames = {25};
  outside.intermittent_fps.push_back(fp);
  EXPECT_THROW(validate(outside), ValidationError);
}

TEST(Scenario, ObjectBoxInterpolates) {
  TrueObject o;
  o.keyframes = {{0, {0, 0, 10, 10}}, {10, {100, 50, 110, 60}}};
  EXPECT_EQ(*object_box_at(o, 5), (BoundingBox{50, 25, 60, 35}));
  EXPECT_EQ(*object_box_at(o, 10), (BoundingBox{100, 50, 110, 60}));
  EXPECT_FALSE(object_box_at(o, 11).has_value());
}

TEST(ScenarioSpecText, Parses) {
  std::istringstream in(R"(
[scenario]
frames = 40
dims = 320x240

[object]
keyframes = 0: 10,10,40,40; 39: 200,100,230,130
confidence = 0.7..0.9

[intermittent_fp]
frames = 3, 17
size = 20x20

[persistent_fp]
frames = 0..40
box = 250,10,280,50

[dropout]
object = 1
frames = 12..15
detector = both
mode = low_confidence
)");
  const auto spec = parse_scenario_spec(in);
  EXPECT_EQ(spec.frame_count, 40);
  EXPECT_EQ(spec.dims, (FrameDims{320, 240}));
  ASSERT_EQ(spec.objects.size(), 1u);
  EXPECT_EQ(spec.objects[0].keyframes.size(), 2u);
  EXPECT_EQ(spec.objects[0].confidence, (Interval{0.7, 0.9}));
  ASSERT_EQ(spec.intermittent_fps.size(), 1u);
  EXPECT_EQ(spec.intermittent_fps[0].frames, (std::vector<std::int64_t>{3, 17}));
  ASSERT_EQ(spec.persistent_fps.size(), 1u);
  ASSERT_EQ(spec.dropouts.size(), 1u);
  EXPECT_EQ(spec.dropouts[0].target, DropoutTarget::both);
  EXPECT_TRUE(spec.dropouts[0].low_confidence);
  EXPECT_NO_THROW(validate(spec));
}

TEST(ScenarioSpecText, UnknownKeyNamesLine) {
  std::istringstream in("[scenario]\nframes = 4\n\n[object]\nspeed = 3\n");
  try {
    parse_scenario_spec(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(ConfigText, ValueParsers) {
  std::istringstream in("a = 640x480\nb = 3..9\nc = 1,2,3,4\nd = 0.25\ne = yes\n");
  const auto secs = config::parse(in);
  ASSERT_EQ(secs.size(), 1u);
  const auto& s = secs[0];
  EXPECT_EQ(config::to_dims(*s.find("a")), (FrameDims{640, 480}));
  EXPECT_EQ(config::to_range(*s.find("b")), (FrameRange{3, 9}));
  EXPECT_EQ(config::to_box(*s.find("c")), (BoundingBox{1, 2, 3, 4}));
  EXPECT_EQ(config::to_interval(*s.find("d")), (std::pair<double, double>{0.25, 0.25}));
  EXPECT_TRUE(config::to_bool(*s.find("e")));
  EXPECT_THROW(config::to_int(*s.find("d")), ParseError);
}
