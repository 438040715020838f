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
#include <span>
#include <string>
#include <vector>

namespace multicast {

// Axis-aligned box in continuous pixel coordinates with a bottom-left origin:
// (x1, y1) is the left-bottom corner, (x2, y2) the right-top corner.
// A valid box has finite, non-negative coordinates and strictly positive area.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct FrameDims {
  int width = 0;
  int height = 0;

  friend bool operator==(const FrameDims&, const FrameDims&) = default;
};

bool is_valid(const BoundingBox& b);
bool is_valid(const FrameDims& d);

// Builds a box and checks the invariants; throws ContractError otherwise.
BoundingBox make_box(double x1, double y1, double x2, double y2);

std::string to_string(const BoundingBox& b);

double intersection_area(const BoundingBox& a, const BoundingBox& b);

// Intersection over union. Symmetric, in [0, 1], 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

inline constexpr double kDefaultTpIou = 0.70;

// True positive criterion: IoU strictly larger than `threshold`.
bool matches_tp(const BoundingBox& pred, const BoundingBox& gt, double threshold = kDefaultTpIou);

bool contains_point(const BoundingBox& b, double x, double y);
bool intersects(const BoundingBox& a, const BoundingBox& b);

// `inner` lies entirely inside `outer` (edges may touch).
bool contains(const BoundingBox& outer, const BoundingBox& inner);

BoundingBox clamp_to_frame(const BoundingBox& b, const FrameDims& dims);

// Grows `b` by pad * width on the left and right and pad * height on the
// bottom and top, then clamps to the frame. Throws ContractError when the
// result is empty (the box lies outside the frame) or pad is negative.
BoundingBox padded_crop(const BoundingBox& b, double pad, const FrameDims& dims);

// Converts between pixel boxes and boxes normalized to [0, 1] by frame dims.
BoundingBox normalize(const BoundingBox& b, const FrameDims& dims);
BoundingBox denormalize(const BoundingBox& b, const FrameDims& dims);

// Flips the vertical axis, mapping a top-left-origin box to bottom-left
// origin (the transform is its own inverse).
BoundingBox flip_vertical(const BoundingBox& b, const FrameDims& dims);

struct TrackRef {
  std::int64_t id = 0;
  BoundingBox box;
};

struct Assignment {
  std::size_t detection = 0;
  std::size_t track = 0;  // index into the `tracks` span
  double iou = 0.0;
};

// Greedy one-to-one matching: candidate pairs with IoU >= min_iou are taken
// in order of decreasing IoU, ties broken by lower track id and then lower
// detection index. Returned in acceptance order.
std::vector<Assignment> greedy_associate(std::span<const BoundingBox> detections,
                                         std::span<const TrackRef> tracks, double min_iou);

}  // namespace multicast
