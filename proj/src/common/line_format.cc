// Copyright 2026 The FleetOps Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "common/line_format.h"

#include <charconv>
#include <system_error>

#include "common/error.h"

namespace fleetops {

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

std::string FormatMetricLine(const MetricLine &line) {
  std::string out = line.metric;
  out += ',';
  for (std::size_t i = 0; i < line.tags.size(); ++i) {
    if (i) out += ';';
    out += line.tags[i].first;
    out += '=';
    out += line.tags[i].second;
  }
  out += ',';
  out += FormatDouble(line.value);
  out += ',';
  out += std::to_string(line.t);
  return out;
}

MetricLine ParseMetricLine(std::string_view text) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      fields.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (fields.size() != 4) throw Error(ErrorCode::kParseError, "metric line needs 4 fields");
  MetricLine line;
  line.metric = std::string(fields[0]);
  std::string_view tags = fields[1];
  while (!tags.empty()) {
    auto semi = tags.find(';');
    auto tag = tags.substr(0, semi);
    auto eq = tag.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kParseError, "tag without '='");
    line.tags.emplace_back(std::string(tag.substr(0, eq)), std::string(tag.substr(eq + 1)));
    if (semi == std::string_view::npos) break;
    tags.remove_prefix(semi + 1);
  }
  auto parse_err = [](std::string_view what) { return Error(ErrorCode::kParseError, std::string(what)); };
  auto v = fields[2];
  if (std::from_chars(v.data(), v.data() + v.size(), line.value).ec != std::errc()) throw parse_err("bad value");
  auto t = fields[3];
  if (std::from_chars(t.data(), t.data() + t.size(), line.t).ec != std::errc()) throw parse_err("bad timestamp");
  return line;
}

}  // namespace fleetops
