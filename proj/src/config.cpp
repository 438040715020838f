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

#include "multicast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "multicast/errors.hpp"

namespace multicast::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_full(const std::string& s, T& v) {
  const std::string t = trim(s);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  return !t.empty() && ec == std::errc() && ptr == last;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

[[noreturn]] void fail(const Entry& e, const std::string& what) {
  throw ParseError(e.line, e.key + ": " + what + " (got '" + e.value + "')");
}

}  // namespace

const Entry* Section::find(const std::string& key) const {
  const Entry* found = nullptr;
  for (const auto& e : entries) {
    if (e.key == key) found = &e;  // last assignment wins
  }
  return found;
}

void Section::expect_keys(std::initializer_list<const char*> allowed) const {
  for (const auto& e : entries) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* k) { return e.key == k; });
    if (!ok) throw ParseError(e.line, "unknown key '" + e.key + "' in [" + name + "]");
  }
}

std::vector<Section> parse(std::istream& in) {
  std::vector<Section> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      const auto sp = inner.find_first_of(" \t");
      Section s;
      s.name = inner.substr(0, sp);
      s.argument = sp == std::string::npos ? std::string() : trim(inner.substr(sp));
      s.line = line_no;
      if (s.name.empty()) throw ParseError(line_no, "empty section name");
      out.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) throw ParseError(line_no, "empty key");
    if (out.empty()) out.push_back(Section{"", "", 0, {}});
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

std::vector<Section> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.detail());
  }
}

double to_double(const Entry& e) {
  double v = 0.0;
  if (!parse_full(e.value, v)) fail(e, "expected a number");
  return v;
}

std::int64_t to_int(const Entry& e) {
  std::int64_t v = 0;
  if (!parse_full(e.value, v)) fail(e, "expected an integer");
  return v;
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(e, "expected true/false");
}

FrameDims to_dims(const Entry& e) {
  const auto x = e.value.find('x');
  FrameDims d;
  if (x == std::string::npos || !parse_full(e.value.substr(0, x), d.width) ||
      !parse_full(e.value.substr(x + 1), d.height) || !is_valid(d)) {
    fail(e, "expected <width>x<height>");
  }
  return d;
}

FrameRange to_range(const Entry& e) {
  const auto dots = e.value.find("..");
  FrameRange r;
  if (dots == std::string::npos || !parse_full(e.value.substr(0, dots), r.lo) ||
      !parse_full(e.value.substr(dots + 2), r.hi) || r.lo < 0 || r.hi < r.lo) {
    fail(e, "expected <lo>..<hi>");
  }
  return r;
}

BoundingBox to_box(const Entry& e) {
  const auto parts = split(e.value, ',');
  double c[4];
  if (parts.size() != 4) fail(e, "expected x1,y1,x2,y2");
  for (int i = 0; i < 4; ++i) {
    if (!parse_full(parts[static_cast<std::size_t>(i)], c[i])) fail(e, "expected x1,y1,x2,y2");
  }
  BoundingBox b{c[0], c[1], c[2], c[3]};
  if (!is_valid(b)) fail(e, "invalid box");
  return b;
}

std::pair<double, double> to_interval(const Entry& e) {
  const auto dots = e.value.find("..");
  double lo = 0.0;
  double hi = 0.0;
  if (dots == std::string::npos) {
    if (!parse_full(e.value, lo)) fail(e, "expected a number or <lo>..<hi>");
    return {lo, lo};
  }
  if (!parse_full(e.value.substr(0, dots), lo) || !parse_full(e.value.substr(dots + 2), hi) ||
      hi < lo) {
    fail(e, "expected <lo>..<hi>");
  }
  return {lo, hi};
}

std::vector<std::int64_t> to_int_list(const Entry& e) {
  std::vector<std::int64_t> out;
  for (const auto& p : split(e.value, ',')) {
    std::int64_t v = 0;
    if (!parse_full(p, v)) fail(e, "expected a comma-separated integer list");
    out.push_back(v);
  }
  return out;
}

}  // namespace multicast::config
