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

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/time.h"

namespace fleetops {

using Tags = std::vector<std::pair<std::string, std::string>>;

/// One record of the metrics export format:
///
///   <metric>,<key>=<value>[;<key>=<value>...],<value>,<t_ns>
///
/// Tags keep their insertion order. Values use the shortest representation
/// that round-trips to the same double. Timestamps are integer nanoseconds of
/// simulated time.
struct MetricLine {
  std::string metric;
  Tags tags;
  double value = 0;
  Nanos t = 0;
};

std::string FormatMetricLine(const MetricLine &line);
MetricLine ParseMetricLine(std::string_view text);
std::string FormatDouble(double v);

}  // namespace fleetops
