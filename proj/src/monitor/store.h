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
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common/time.h"
#include "monitor/exact_sum.h"

namespace fleetops::monitor {

struct RetentionTier {
  Nanos resolution;
  Nanos horizon;
};

/// (1 s, 90 d) raw, then (60 s, 400 d) one-minute aggregates.
std::vector<RetentionTier> DefaultTiers();
inline constexpr Nanos kMinFinestHorizon = 90 * kDay;

struct Aggregate {
  Nanos t = 0;  // bucket start
  std::uint64_t count = 0;
  double min = 0;
  double max = 0;
  double sum = 0;  // exact sum, rounded once
  double mean = 0;  // sum / count
};

struct RetentionCounts {
  std::uint64_t downsampled = 0;  // points folded into a coarser tier
  std::uint64_t expired = 0;      // aggregates deleted past the last horizon
  bool operator==(const RetentionCounts &) const = default;
};

using SeriesId = std::uint32_t;

/// In-memory tiered time-series store. The first tier keeps raw points in
/// run-length chunks (start, step, values); later tiers keep per-bucket
/// count/min/max and an exact sum, so aggregates merge without error.
class Store {
 public:
  explicit Store(std::vector<RetentionTier> tiers = DefaultTiers());

  SeriesId Series(std::string_view name);
  std::optional<SeriesId> FindSeries(std::string_view name) const;
  const std::string &series_name(SeriesId id) const { return series_[id].name; }
  std::size_t series_count() const { return series_.size(); }
  std::vector<std::string> SeriesNames(std::string_view prefix = {}) const;

  void Ingest(SeriesId id, Nanos t, double value);
  void Ingest(std::string_view name, Nanos t, double value) { Ingest(Series(name), t, value); }

  /// Buckets of width `resolution` (aligned to multiples of it) over
  /// [t0, t1). Empty buckets are omitted.
  std::vector<Aggregate> Query(SeriesId id, Nanos t0, Nanos t1, Nanos resolution) const;
  /// Raw points still held at full resolution within [t0, t1).
  std::vector<std::pair<Nanos, double>> Raw(SeriesId id, Nanos t0, Nanos t1) const;
  std::optional<std::pair<Nanos, double>> Last(SeriesId id) const;

  RetentionCounts EnforceRetention(Nanos now);

  std::uint64_t raw_count(SeriesId id) const;
  std::uint64_t bucket_count(SeriesId id, std::size_t tier) const;
  const std::vector<RetentionTier> &tiers() const { return tiers_; }
  Nanos clock() const { return clock_; }

  void Save(const std::string &path) const;
  static Store Load(const std::string &path);

 private:
  struct Chunk {
    Nanos t0;
    Nanos step;
    std::vector<double> values;
    Nanos time(std::size_t i) const { return t0 + step * static_cast<Nanos>(i); }
  };
  struct Bucket {
    Nanos t;
    std::uint64_t count;
    double min;
    double max;
    ExactSum sum;
  };
  struct SeriesData {
    std::string name;
    std::deque<Chunk> raw;
    std::vector<std::deque<Bucket>> tiers;  // tiers_[1..]
    std::optional<Nanos> last_t;
    std::uint64_t raw_points = 0;
  };

  static void Fold(std::deque<Bucket> &dst, Nanos resolution, const Bucket &b);

  std::vector<RetentionTier> tiers_;
  std::vector<SeriesData> series_;
  std::unordered_map<std::string, SeriesId> index_;
  Nanos clock_ = 0;
};

}  // namespace fleetops::monitor
