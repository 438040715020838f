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
#include "multicast/detstream.hpp"
#include "multicast/errors.hpp"

using namespace multicast;

namespace {

DetectionLog parse(const std::string& text, const ParseOptions& opts = {}) {
  std::istringstream in(text);
  return parse_detection_log(in, opts);
}

}  // namespace

TEST(ParseLog, HeaderOnlyGivesEmptyFrames) {
  const auto log = parse("# frames 0..3 dims 640x480\n");
  ASSERT_EQ(log.frames.size(), 3u);
  for (std::int64_t f = 0; f < 3; ++f) {
    EXPECT_EQ(log.frames[static_cast<std::size_t>(f)].frame_id, f);
    EXPECT_TRUE(log.frames[static_cast<std::size_t>(f)].detections.empty());
  }
  EXPECT_EQ(log.dims, (FrameDims{640, 480}));
}

TEST(ParseLog, SingleLine) {
  const auto log = parse("12, 100, 50, 180, 120, handgun, 0.84\n", {.dims = FrameDims{640, 480}});
  ASSERT_EQ(log.record_count(), 1u);
  const auto* f = log.find(12);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->detections[0].box, (BoundingBox{100, 50, 180, 120}));
  EXPECT_EQ(f->detections[0].class_label, "handgun");
  EXPECT_EQ(f->detections[0].confidence, 0.84);
}

TEST(ParseLog, WhitespaceDelimitersAndMissingConfidence) {
  const auto log = parse("# frames 0..2 dims 100x100\n1 10 10 20 20 handgun\n");
  ASSERT_EQ(log.record_count(), 1u);
  EXPECT_EQ(log.find(1)->detections[0].confidence, 1.0);
}

TEST(ParseLog, Errors) {
  try {
    parse("# frames 0..20 dims 100x100\n1, 10, 10, 20, 20, handgun\n3, 30, 10, 20, 20, handgun\n");
    FAIL() << "inverted box accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("# frames 0..20 dims 100x100\n5, 1, 1, 2, 2, g\n4, 1, 1, 2, 2, g\n"), OrderingError);
  EXPECT_THROW(parse("# frames 0..20 dims 100x100\n5, 1, 1, 2, g\n"), ParseError);
  EXPECT_THROW(parse("# frames 0..20 dims 100x100\n5, 1, 1, 2, 2, g, 1.5\n"), ParseError);
  EXPECT_THROW(parse("# frames 0..20 dims 100x100\n5, 1, x, 2, 2, g\n"), ParseError);
  EXPECT_THROW(parse("# frames 0..4 dims 100x100\n5, 1, 1, 2, 2, g\n"), ParseError);
  EXPECT_THROW(parse("5, 1, 1, 2, 2, g\n"), ParseError);
}

TEST(ParseLog, TopLeftOriginFlips) {
  const auto log = parse("0, 10, 20, 30, 50, handgun\n", {.dims = FrameDims{100, 100}, .top_left_origin = true});
  EXPECT_EQ(log.frames[0].detections[0].box, (BoundingBox{10, 50, 30, 80}));
}

TEST(WriteLog, EmptyIsHeaderOnly) {
  DetectionLog log;
  log.dims = {640, 480};
  EXPECT_EQ(format_detection_log(log), "# frames 0..0 dims 640x480\n");
}

TEST(WriteLog, SameFrameTwoLines) {
  const std::vector<DetectionRecord> recs{{4, {1, 2, 3, 4}, "handgun", 0.5}, {4, {5, 6, 7, 8}, "handgun", 0.25}};
  const auto log = make_dense_log({0, 6}, {100, 100}, recs);
  const std::string text = format_detection_log(log);
  EXPECT_EQ(text,
            "# frames 0..6 dims 100x100\n"
            "4, 1, 2, 3, 4, handgun, 0.5\n"
            "4, 5, 6, 7, 8, handgun, 0.25\n");
  EXPECT_EQ(parse(text), log);
}

TEST(WriteLog, RandomRoundTrip) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const bool conf = rng.below(2) == 0;
    const auto log = fixtures::random_log(rng, conf);
    const std::string text = format_detection_log(log, {.with_confidence = conf});
    const auto back = parse(text);
    EXPECT_EQ(back, log);
    EXPECT_EQ(format_detection_log(back, {.with_confidence = conf}), text);
  }
}

TEST(WriteLog, RejectsBadLabel) {
  const std::vector<DetectionRecord> recs{{0, {1, 2, 3, 4}, "hand gun", 0.5}};
  const auto log = make_dense_log({0, 1}, {100, 100}, recs);
  EXPECT_THROW(format_detection_log(log), ContractError);
}

TEST(Threshold, KeepsAtOrAbove) {
  FrameDetections f{0, {{0, {0, 0, 1, 1}, "h", 0.09}, {0, {0, 0, 1, 1}, "h", 0.1}, {0, {0, 0, 1, 1}, "h", 0.3}}, {10, 10}};
  EXPECT_EQ(above_threshold(f, kPrimaryThreshold).size(), 2u);
  EXPECT_EQ(above_threshold(f, kConfirmationThreshold).size(), 1u);
  EXPECT_EQ(default_threshold(DetectorRole::primary_detector), 0.1);
  EXPECT_EQ(default_threshold(DetectorRole::confirmation_detector), 0.3);
}

TEST(ReplayDetector, RegionQuery) {
  const std::vector<DetectionRecord> recs{{2, {10, 10, 20, 20}, "handgun", 0.9},
                                          {2, {60, 60, 80, 80}, "handgun", 0.5},
                                          {2, {30, 30, 40, 40}, "handgun", 0.2}};
  const ReplayConfirmationDetector det(make_dense_log({0, 5}, {100, 100}, recs));
  EXPECT_EQ(det.region_query(2, {0, 0, 100, 100}).size(), 2u);
  EXPECT_TRUE(det.region_query(2, {90, 0, 100, 10}).empty());
  EXPECT_TRUE(det.region_query(42, {0, 0, 100, 100}).empty());
  // Overlaps but the center (15, 15) lies outside.
  EXPECT_TRUE(det.region_query(2, {16, 16, 30, 30}).empty());
  EXPECT_EQ(det.region_query(2, {5, 5, 25, 25}).size(), 1u);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(100.0), "100");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}
