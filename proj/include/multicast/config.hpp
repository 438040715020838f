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
#include <string>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/geometry.hpp"

// Minimal sectioned key-value text format shared by scenario specs, run
// manifests and training configs:
//
//   # comment
//   [section optional-argument]
//   key = value
//
// Sections may repeat. Keys before the first section belong to a section
// with an empty name.
namespace multicast::config {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::string argument;
  std::size_t line = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& key) const;
  // Throws ParseError naming the first key not in `allowed`.
  void expect_keys(std::initializer_list<const char*> allowed) const;
};

std::vector<Section> parse(std::istream& in);
std::vector<Section> read(const std::filesystem::path& path);

// Value parsers; all throw ParseError carrying the entry's line.
double to_double(const Entry& e);
std::int64_t to_int(const Entry& e);
bool to_bool(const Entry& e);
FrameDims to_dims(const Entry& e);         // "640x480"
FrameRange to_range(const Entry& e);       // "0..60", half-open
BoundingBox to_box(const Entry& e);        // "x1,y1,x2,y2"
std::pair<double, double> to_interval(const Entry& e);  // "0.1..0.6" or a single value
std::vector<std::int64_t> to_int_list(const Entry& e);  // "3, 17, 40"

}  // namespace multicast::config
