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

#include "monitor/alerts.h"

#include <algorithm>

#include "common/error.h"
#include "device/device.h"

namespace fleetops::monitor {

std::vector<AlertRule> DefaultAlertRules() {
  std::vector<AlertRule> rules;
  AlertRule supply;
  supply.name = "supply_out_of_range";
  for (const auto &c : device::Channels())
    if (c.kind == device::ChannelKind::kVoltage || c.kind == device::ChannelKind::kFlag)
      supply.metrics.emplace_back(c.name);
  supply.comparison = Comparison::kOutsideRange;
  supply.use_channel_bounds = true;
  supply.severity = "critical";
  rules.push_back(supply);

  AlertRule temp;
  temp.name = "temperature_high";
  for (const auto &c : device::Channels())
    if (c.kind == device::ChannelKind::kTemperature) temp.metrics.emplace_back(c.name);
  temp.threshold = 70.0;
  temp.for_duration = 3 * kMinute;
  rules.push_back(temp);

  AlertRule probe;
  probe.name = "probe_unresponsive";
  probe.metrics = {"probe.response_ratio"};
  probe.comparison = Comparison::kBelow;
  probe.threshold = 1.0;
  probe.severity = "critical";
  rules.push_back(probe);

  AlertRule fidelity;
  fidelity.name = "fidelity_low";
  fidelity.metrics = {"fidelity.accuracy"};
  fidelity.comparison = Comparison::kBelow;
  fidelity.threshold = 0.90;
  rules.push_back(fidelity);
  return rules;
}

nlohmann::json ToJson(const AlertEvent &e) {
  return {{"t", e.t},           {"rule", e.rule},   {"series", e.series}, {"severity", e.severity},
          {"state", e.firing ? "firing" : "resolved"}, {"value", e.value}};
}

AlertEngine::AlertEngine(std::vector<AlertRule> rules) : rules_(std::move(rules)) {
  for (const auto &r : rules_)
    if (r.for_duration < 0) throw Error(ErrorCode::kInvalidConfig, "alert rule " + r.name + ": negative for_duration");
}

bool AlertEngine::Holds(const State &s, double v) const {
  const AlertRule &r = rules_[s.rule];
  switch (r.comparison) {
    case Comparison::kAbove: return v > r.threshold;
    case Comparison::kBelow: return v < r.threshold;
    case Comparison::kOutsideRange: return v < s.lo || v > s.hi;
  }
  return false;
}

void AlertEngine::Observe(std::uint32_t key, std::string_view series, std::string_view metric, Nanos t,
                          double value) {
  if (key >= bindings_.size()) bindings_.resize(key + 1);
  auto &binding = bindings_[key];
  if (!binding) {
    binding.emplace();
    for (std::uint32_t r = 0; r < rules_.size(); ++r) {
      const AlertRule &rule = rules_[r];
      if (std::find(rule.metrics.begin(), rule.metrics.end(), metric) == rule.metrics.end()) continue;
      State s{r, std::string(series), std::nullopt, false, 0, 0, rule.lo, rule.hi};
      if (rule.use_channel_bounds) {
        if (auto c = device::ChannelIndex(metric)) {
          s.lo = device::Channels()[*c].lo;
          s.hi = device::Channels()[*c].hi;
        }
      }
      binding->push_back(static_cast<std::uint32_t>(states_.size()));
      states_.push_back(std::move(s));
    }
  }
  for (std::uint32_t i : *binding) {
    State &s = states_[i];
    s.last_value = value;
    if (Holds(s, value)) {
      if (!s.holds_since) s.holds_since = t;
      if (!s.firing) attention_.insert(i);
    } else {
      s.holds_since.reset();
      if (s.firing) attention_.insert(i);
    }
  }
}

std::vector<AlertEvent> AlertEngine::Evaluate(Nanos now) {
  std::vector<AlertEvent> events;
  for (auto it = attention_.begin(); it != attention_.end();) {
    State &s = states_[*it];
    const AlertRule &r = rules_[s.rule];
    bool done = true;
    if (!s.firing && s.holds_since) {
      if (now - *s.holds_since >= r.for_duration) {
        s.firing = true;
        s.fired_at = now;
        events.push_back({now, r.name, s.series, r.severity, true, s.last_value});
      } else {
        done = false;
      }
    } else if (s.firing && !s.holds_since) {
      s.firing = false;
      events.push_back({now, r.name, s.series, r.severity, false, s.last_value});
    }
    it = done ? attention_.erase(it) : std::next(it);
  }
  return events;
}

std::vector<AlertEngine::Firing> AlertEngine::firing() const {
  std::vector<Firing> out;
  for (const auto &s : states_)
    if (s.firing) out.push_back({rules_[s.rule].name, s.series, rules_[s.rule].severity, s.fired_at});
  return out;
}

std::string_view AnnotationCategoryName(AnnotationCategory c) {
  switch (c) {
    case AnnotationCategory::kPowerOutage: return "PowerOutage";
    case AnnotationCategory::kMaintenance: return "Maintenance";
    case AnnotationCategory::kOther: return "Other";
  }
  return "Other";
}

AnnotationCategory AnnotationCategoryFromName(std::string_view name) {
  if (name == "PowerOutage") return AnnotationCategory::kPowerOutage;
  if (name == "Maintenance") return AnnotationCategory::kMaintenance;
  if (name == "Other") return AnnotationCategory::kOther;
  throw Error(ErrorCode::kInvalidArgument, "unknown annotation category " + std::string(name));
}

nlohmann::json ToJson(const Annotation &a) {
  return {{"id", a.id},         {"t0", a.t0},     {"t1", a.t1},
          {"author", a.author}, {"text", a.text}, {"category", AnnotationCategoryName(a.category)}};
}

std::uint64_t AnnotationLog::Add(Annotation a) {
  if (a.author.empty()) throw Error(ErrorCode::kInvalidArgument, "annotation author is empty");
  if (a.t1 < a.t0) throw Error(ErrorCode::kInvalidRange, "annotation ends before it starts");
  a.id = items_.size() + 1;
  items_.push_back(std::move(a));
  return items_.back().id;
}

std::vector<Annotation> AnnotationLog::Query(Nanos t0, Nanos t1) const {
  if (t1 < t0) throw Error(ErrorCode::kInvalidRange, "query ends before it starts");
  std::vector<Annotation> out;
  for (const auto &a : items_)
    if (a.t0 <= t1 && a.t1 >= t0) out.push_back(a);
  return out;
}

}  // namespace fleetops::monitor
