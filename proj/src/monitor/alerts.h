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

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "common/time.h"

namespace fleetops::monitor {

enum class Comparison { kAbove, kBelow, kOutsideRange };

struct AlertRule {
  std::string name;
  /// Metric names the rule watches (the part after "<system>.").
  std::vector<std::string> metrics;
  Comparison comparison = Comparison::kAbove;
  double threshold = 0;
  /// kOutsideRange with use_channel_bounds takes each channel's plausible
  /// range from the telemetry schema instead of lo/hi.
  double lo = 0;
  double hi = 0;
  bool use_channel_bounds = false;
  Nanos for_duration = 0;
  std::string severity = "warning";
};

/// Supply out of range, temperature above 70 degC for 3 min, probe response
/// ratio below 1, fidelity accuracy below 0.90.
std::vector<AlertRule> DefaultAlertRules();

struct AlertEvent {
  Nanos t = 0;
  std::string rule;
  std::string series;
  std::string severity;
  bool firing = false;
  double value = 0;
};

nlohmann::json ToJson(const AlertEvent &e);

/// Tracks, per (rule, series), since when the predicate has held; a rule
/// fires once it has held for at least for_duration and resolves on the
/// first evaluation after it stops holding.
class AlertEngine {
 public:
  explicit AlertEngine(std::vector<AlertRule> rules = DefaultAlertRules());

  /// `key` is a caller-chosen dense series id; `series` and `metric` are
  /// only read the first time a key is seen.
  void Observe(std::uint32_t key, std::string_view series, std::string_view metric, Nanos t, double value);
  std::vector<AlertEvent> Evaluate(Nanos now);

  struct Firing {
    std::string rule;
    std::string series;
    std::string severity;
    Nanos since;
  };
  std::vector<Firing> firing() const;
  const std::vector<AlertRule> &rules() const { return rules_; }

 private:
  struct State {
    std::uint32_t rule;
    std::string series;
    std::optional<Nanos> holds_since;
    bool firing = false;
    Nanos fired_at = 0;
    double last_value = 0;
    double lo = 0;
    double hi = 0;
  };
  bool Holds(const State &s, double v) const;

  std::vector<AlertRule> rules_;
  std::vector<std::optional<std::vector<std::uint32_t>>> bindings_;  // key -> state indices
  std::vector<State> states_;
  std::set<std::uint32_t> attention_;
};

enum class AnnotationCategory { kPowerOutage, kMaintenance, kOther };
std::string_view AnnotationCategoryName(AnnotationCategory c);
AnnotationCategory AnnotationCategoryFromName(std::string_view name);

struct Annotation {
  std::uint64_t id = 0;
  Nanos t0 = 0;
  Nanos t1 = 0;  // equal to t0 for a point annotation
  std::string author;
  std::string text;
  AnnotationCategory category = AnnotationCategory::kOther;
};

nlohmann::json ToJson(const Annotation &a);

class AnnotationLog {
 public:
  std::uint64_t Add(Annotation a);
  /// Annotations overlapping [t0, t1].
  std::vector<Annotation> Query(Nanos t0, Nanos t1) const;
  const std::vector<Annotation> &all() const { return items_; }

 private:
  std::vector<Annotation> items_;
};

}  // namespace fleetops::monitor
