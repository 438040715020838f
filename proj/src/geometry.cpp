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

#include "multicast/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "multicast/errors.hpp"

namespace multicast {

bool is_valid(const BoundingBox& b) {
  const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
                      std::isfinite(b.y2);
  return finite && b.x1 >= 0.0 && b.y1 >= 0.0 && b.x1 < b.x2 && b.y1 < b.y2;
}

bool is_valid(const FrameDims& d) { return d.width > 0 && d.height > 0; }

BoundingBox make_box(double x1, double y1, double x2, double y2) {
  BoundingBox b{x1, y1, x2, y2};
  if (!is_valid(b)) {
    throw ContractError("invalid bounding box " + to_string(b));
  }
  return b;
}

std::string to_string(const BoundingBox& b) {
  std::ostringstream os;
  os << "(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ")";
  return os.str();
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  if (a == b) return 1.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool matches_tp(const BoundingBox& pred, const BoundingBox& gt, double threshold) {
  return iou(pred, gt) > threshold;
}

bool contains_point(const BoundingBox& b, double x, double y) {
  return x >= b.x1 && x <= b.x2 && y >= b.y1 && y <= b.y2;
}

bool intersects(const BoundingBox& a, const BoundingBox& b) {
  return intersection_area(a, b) > 0.0;
}

bool contains(const BoundingBox& outer, const BoundingBox& inner) {
  return inner.x1 >= outer.x1 && inner.y1 >= outer.y1 && inner.x2 <= outer.x2 &&
         inner.y2 <= outer.y2;
}

BoundingBox clamp_to_frame(const BoundingBox& b, const FrameDims& dims) {
  const double w = dims.width;
  const double h = dims.height;
  return BoundingBox{std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h),
                     std::clamp(b.x2, 0.0, w), std::clamp(b.y2, 0.0, h)};
}

BoundingBox padded_crop(const BoundingBox& b, double pad, const FrameDims& dims) {
  if (!(pad >= 0.0) || !std::isfinite(pad)) {
    throw ContractError("crop padding must be a finite value >= 0");
  }
  const double dx = pad * b.width();
  const double dy = pad * b.height();
  const BoundingBox grown{b.x1 - dx, b.y1 - dy, b.x2 + dx, b.y2 + dy};
  const BoundingBox out = clamp_to_frame(grown, dims);
  if (!(out.x1 < out.x2 && out.y1 < out.y2)) {
    throw ContractError("crop of " + to_string(b) + " lies outside the frame");
  }
  return out;
}

BoundingBox normalize(const BoundingBox& b, const FrameDims& dims) {
  const double w = dims.width;
  const double h = dims.height;
  return BoundingBox{b.x1 / w, b.y1 / h, b.x2 / w, b.y2 / h};
}

BoundingBox denormalize(const BoundingBox& b, const FrameDims& dims) {
  const double w = dims.width;
  const double h = dims.height;
  return BoundingBox{b.x1 * w, b.y1 * h, b.x2 * w, b.y2 * h};
}

BoundingBox flip_vertical(const BoundingBox& b, const FrameDims& dims) {
  const double h = dims.height;
  return BoundingBox{b.x1, h - b.y2, b.x2, h - b.y1};
}

std::vector<Assignment> greedy_associate(std::span<const BoundingBox> detections,
                                         std::span<const TrackRef> tracks, double min_iou) {
  std::vector<Assignment> candidates;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      const double v = iou(detections[d], tracks[t].box);
      if (v >= min_iou && v > 0.0) candidates.push_back({d, t, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Assignment& a, const Assignment& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (tracks[a.track].id != tracks[b.track].id) return tracks[a.track].id < tracks[b.track].id;
    return a.detection < b.detection;
  });

  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> track_used(tracks.size(), false);
  std::vector<Assignment> out;
  for (const auto& c : candidates) {
    if (det_used[c.detection] || track_used[c.track]) continue;
    det_used[c.detection] = true;
    track_used[c.track] = true;
    out.push_back(c);
  }
  return out;
}

}  // namespace multicast
