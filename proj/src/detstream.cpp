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

#include "multicast/detstream.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "multicast/errors.hpp"

namespace multicast {

const FrameDetections* DetectionLog::find(std::int64_t frame_id) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame_id,
                             [](const FrameDetections& f, std::int64_t id) { return f.frame_id < id; });
  if (it == frames.end() || it->frame_id != frame_id) return nullptr;
  return &*it;
}

std::size_t DetectionLog::record_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.detections.size();
  return n;
}

DetectionLog make_dense_log(FrameRange range, FrameDims dims,
                            std::span<const DetectionRecord> records) {
  DetectionLog log{range, dims, {}};
  log.frames.reserve(static_cast<std::size_t>(range.size()));
  for (std::int64_t f = range.lo; f < range.hi; ++f) log.frames.push_back({f, {}, dims});
  for (const auto& r : records) {
    if (!range.contains(r.frame_id)) {
      throw ContractError("record at frame " + std::to_string(r.frame_id) +
                          " outside log range");
    }
    log.frames[static_cast<std::size_t>(r.frame_id - range.lo)].detections.push_back(r);
  }
  return log;
}

double default_threshold(DetectorRole role) {
  return role == DetectorRole::primary_detector ? kPrimaryThreshold : kConfirmationThreshold;
}

std::vector<DetectionRecord> above_threshold(const FrameDetections& frame, double threshold) {
  std::vector<DetectionRecord> out;
  for (const auto& d : frame.detections) {
    if (d.confidence >= threshold) out.push_back(d);
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool pending_comma = false;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : line) {
    if (c == ',') {
      if (cur.empty() && pending_comma) out.emplace_back();  // empty field between commas
      flush();
      pending_comma = true;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      flush();
    } else {
      if (cur.empty()) pending_comma = false;
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

template <typename T>
bool parse_full(const std::string& s, T& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool parse_range_token(const std::string& tok, FrameRange& r) {
  const auto dots = tok.find("..");
  if (dots == std::string::npos) return false;
  return parse_full(tok.substr(0, dots), r.lo) && parse_full(tok.substr(dots + 2), r.hi) &&
         r.lo >= 0 && r.hi >= r.lo;
}

bool parse_dims_token(const std::string& tok, FrameDims& d) {
  const auto x = tok.find('x');
  if (x == std::string::npos) return false;
  return parse_full(tok.substr(0, x), d.width) && parse_full(tok.substr(x + 1), d.height) &&
         is_valid(d);
}

struct Header {
  std::optional<FrameRange> range;
  std::optional<FrameDims> dims;
};

// Reads `frames a..b` / `dims WxH` pairs from a comment line. Comments without
// either keyword are ignored.
void parse_header_comment(const std::string& body, std::size_t line_no, Header& h) {
  std::istringstream is(body);
  std::string tok;
  while (is >> tok) {
    if (tok == "frames") {
      std::string v;
      FrameRange r;
      if (!(is >> v) || !parse_range_token(v, r)) throw ParseError(line_no, "bad frames header");
      h.range = r;
    } else if (tok == "dims") {
      std::string v;
      FrameDims d;
      if (!(is >> v) || !parse_dims_token(v, d)) throw ParseError(line_no, "bad dims header");
      h.dims = d;
    }
  }
}

bool valid_label(const std::string& s) {
  if (s.empty() || s.front() == '#') return false;
  return std::none_of(s.begin(), s.end(),
                      [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace

DetectionLog parse_detection_log(std::istream& in, const ParseOptions& opts) {
  Header header;
  std::vector<DetectionRecord> records;
  std::vector<std::size_t> record_lines;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (!seen_data) parse_header_comment(line.substr(first + 1), line_no, header);
      continue;
    }
    seen_data = true;

    const auto fields = split_fields(line);
    if (fields.size() != 6 && fields.size() != 7) {
      throw ParseError(line_no, "expected 6 or 7 fields, got " + std::to_string(fields.size()));
    }
    DetectionRecord r;
    if (!parse_full(fields[0], r.frame_id) || r.frame_id < 0) {
      throw ParseError(line_no, "bad frame id '" + fields[0] + "'");
    }
    std::array<double, 4> c{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!parse_full(fields[i + 1], c[i])) {
        throw ParseError(line_no, "bad coordinate '" + fields[i + 1] + "'");
      }
    }
    r.box = BoundingBox{c[0], c[1], c[2], c[3]};
    if (!is_valid(r.box)) throw ParseError(line_no, "invalid box " + to_string(r.box));
    r.class_label = fields[5];
    if (!valid_label(r.class_label)) throw ParseError(line_no, "bad class label");
    if (fields.size() == 7) {
      if (!parse_full(fields[6], r.confidence) || !(r.confidence >= 0.0 && r.confidence <= 1.0)) {
        throw ParseError(line_no, "confidence must be in [0, 1]");
      }
    }
    if (!records.empty() && r.frame_id < records.back().frame_id) {
      throw OrderingError("line " + std::to_string(line_no) + ": frame " +
                          std::to_string(r.frame_id) + " after frame " +
                          std::to_string(records.back().frame_id));
    }
    records.push_back(std::move(r));
    record_lines.push_back(line_no);
  }
  if (in.bad()) throw IoError("read failure");

  std::optional<FrameDims> dims = header.dims ? header.dims : opts.dims;
  if (!dims) throw ParseError(line_no, "no dims header and no default dims given");

  if (opts.top_left_origin) {
    for (auto& r : records) r.box = flip_vertical(r.box, *dims);
  }

  if (header.range) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!header.range->contains(records[i].frame_id)) {
        throw ParseError(record_lines[i], "frame " + std::to_string(records[i].frame_id) +
                                              " outside declared range");
      }
    }
    return make_dense_log(*header.range, *dims, records);
  }

  // No declared range: one entry per distinct frame id that appears.
  DetectionLog log;
  log.dims = *dims;
  for (auto& r : records) {
    if (log.frames.empty() || log.frames.back().frame_id != r.frame_id) {
      log.frames.push_back({r.frame_id, {}, *dims});
    }
    log.frames.back().detections.push_back(std::move(r));
  }
  if (!log.frames.empty()) {
    log.range = {log.frames.front().frame_id, log.frames.back().frame_id + 1};
  }
  return log;
}

DetectionLog read_detection_log(const std::filesystem::path& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_detection_log(in, opts);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  } catch (const OrderingError& e) {
    throw OrderingError(path.string() + ": " + e.what());
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw ContractError("cannot format number");
  return std::string(buf.data(), ptr);
}

void write_detection_log(const DetectionLog& log, std::ostream& out, const WriteOptions& opts) {
  if (!is_valid(log.dims)) throw ContractError("log dims must be positive");
  out << "# frames " << log.range.lo << ".." << log.range.hi << " dims " << log.dims.width << "x"
      << log.dims.height << "\n";
  std::int64_t prev = log.range.lo;
  for (const auto& frame : log.frames) {
    if (!log.range.contains(frame.frame_id) || frame.frame_id < prev) {
      throw ContractError("frames must be ordered and inside the log range");
    }
    prev = frame.frame_id;
    for (const auto& r : frame.detections) {
      if (r.frame_id != frame.frame_id) throw ContractError("record frame id mismatch");
      if (!valid_label(r.class_label)) throw ContractError("class label '" + r.class_label + "'");
      out << r.frame_id << ", " << format_number(r.box.x1) << ", " << format_number(r.box.y1)
          << ", " << format_number(r.box.x2) << ", " << format_number(r.box.y2) << ", "
          << r.class_label;
      if (opts.with_confidence) out << ", " << format_number(r.confidence);
      out << "\n";
    }
  }
  if (!out) throw IoError("write failure");
}

void save_detection_log(const DetectionLog& log, const std::filesystem::path& path,
                        const WriteOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_detection_log(log, out, opts);
}

std::string format_detection_log(const DetectionLog& log, const WriteOptions& opts) {
  std::ostringstream os;
  write_detection_log(log, os, opts);
  return os.str();
}

ReplayConfirmationDetector::ReplayConfirmationDetector(DetectionLog log, double threshold)
    : log_(std::move(log)), threshold_(threshold) {}

std::vector<DetectionRecord> ReplayConfirmationDetector::region_query(
    std::int64_t frame_id, const BoundingBox& region) const {
  std::vector<DetectionRecord> out;
  const FrameDetections* frame = log_.find(frame_id);
  if (frame == nullptr) return out;
  for (const auto& d : frame->detections) {
    if (d.confidence < threshold_) continue;
    if (!intersects(d.box, region)) continue;
    if (!contains_point(region, d.box.center_x(), d.box.center_y())) continue;
    out.push_back(d);
  }
  return out;
}

}  // namespace multicast
