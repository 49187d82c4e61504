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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "common/error.h"
#include "device/device.h"
#include "monitor/alerts.h"
#include "monitor/exact_sum.h"
#include "monitor/store.h"
#include "unit/oracles.h"

namespace fleetops::monitor {
namespace {

ErrorCode CodeOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ExactSum, MatchesMpfrOnCancellingInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-60, 60);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v;
    ExactSum s;
    for (int i = 0; i < 300; ++i) {
      double x = std::ldexp(mant(rng), ex(rng));
      v.push_back(x);
      v.push_back(-x * (rng() % 2));  // partial cancellation
    }
    for (double x : v) s.Add(x);
    EXPECT_EQ(s.value(), testing::ExactSumReference(v)) << trial;
  }
}

TEST(ExactSum, MergeIsExact) {
  ExactSum a, b;
  a.Add(1e100);
  a.Add(1.0);
  b.Add(-1e100);
  a.Merge(b);
  EXPECT_EQ(a.value(), 1.0);
  EXPECT_EQ(ExactSum().value(), 0.0);
}

TEST(Store, HourAtOneHertzInMinuteBuckets) {
  Store st;
  SeriesId id = st.Series("sys01.in_12v");
  for (int i = 0; i < 3600; ++i) st.Ingest(id, i * kSecond, 12.0);
  auto q = st.Query(id, 0, kHour, kMinute);
  ASSERT_EQ(q.size(), 60u);
  for (const auto &a : q) {
    EXPECT_EQ(a.count, 60u);
    EXPECT_EQ(a.mean, 12.0);
  }
  EXPECT_EQ(st.raw_count(id), 3600u);
}

TEST(Store, Errors) {
  Store st;
  SeriesId id = st.Series("x");
  st.Ingest(id, 10, 1.0);
  EXPECT_EQ(CodeOf([&] { st.Ingest(id, 9, 1.0); }), ErrorCode::kNonMonotonicSample);
  st.Ingest(id, 10, 2.0);  // equal timestamps are allowed
  EXPECT_EQ(CodeOf([&] { st.Query(id, 5, 5, kSecond); }), ErrorCode::kInvalidRange);
  st.EnforceRetention(500 * kDay);
  EXPECT_EQ(CodeOf([&] { st.Query(id, 0, 50 * kDay, kSecond); }), ErrorCode::kOutOfRetention);
  EXPECT_EQ(CodeOf([] { Store bad({{kSecond, 30 * kDay}}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { Store bad({{kSecond, 90 * kDay}, {90 * kSecond, 60 * kDay}}); }), ErrorCode::kInvalidConfig);
}

TEST(Retention, NothingOldIsNoop) {
  Store st;
  SeriesId id = st.Series("x");
  for (int i = 0; i < 100; ++i) st.Ingest(id, i * kSecond, i);
  EXPECT_EQ(st.EnforceRetention(kDay), (RetentionCounts{0, 0}));
}

TEST(Retention, OneDayAgedPastHorizon) {
  Store st;
  SeriesId id = st.Series("sys01.temp_asic0");
  for (int i = 0; i < 86400; ++i) st.Ingest(id, i * kSecond, 40.0 + (i % 7) * device::kQuantum);
  RetentionCounts c = st.EnforceRetention(91 * kDay);
  EXPECT_EQ(c.downsampled, 86400u);
  EXPECT_EQ(c.expired, 0u);
  EXPECT_EQ(st.raw_count(id), 0u);
  EXPECT_EQ(st.bucket_count(id, 1), 1440u);
  EXPECT_EQ(st.EnforceRetention(91 * kDay), (RetentionCounts{0, 0}));
  // Past the last horizon everything is gone.
  RetentionCounts late = st.EnforceRetention(402 * kDay);
  EXPECT_EQ(late.expired, 1440u);
  EXPECT_EQ(st.bucket_count(id, 1), 0u);
}

// Brute force over the raw log: count/min/max and an MPFR sum per bucket.
std::vector<Aggregate> Oracle(const std::vector<std::pair<Nanos, double>> &log, Nanos t0, Nanos t1, Nanos res) {
  std::map<Nanos, std::vector<double>> b;
  for (const auto &[t, v] : log)
    if (t >= t0 && t < t1) b[(t / res) * res].push_back(v);
  std::vector<Aggregate> out;
  for (const auto &[t, vs] : b) {
    Aggregate a;
    a.t = t;
    a.count = vs.size();
    a.min = *std::min_element(vs.begin(), vs.end());
    a.max = *std::max_element(vs.begin(), vs.end());
    a.sum = testing::ExactSumReference(vs);
    a.mean = a.sum / static_cast<double>(vs.size());
    out.push_back(a);
  }
  return out;
}

void ExpectSame(const std::vector<Aggregate> &got, const std::vector<Aggregate> &want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].t, want[i].t);
    EXPECT_EQ(got[i].count, want[i].count);
    EXPECT_EQ(got[i].min, want[i].min);
    EXPECT_EQ(got[i].max, want[i].max);
    EXPECT_EQ(got[i].sum, want[i].sum);
    EXPECT_EQ(got[i].mean, want[i].mean);
  }
}

TEST(Retention, BoundarySpanningQueryEqualsBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-3, 3);
  Store st;
  SeriesId id = st.Series("sys02.fpga_current");
  std::vector<std::pair<Nanos, double>> log;
  for (int i = 0; i < 2 * 86400; ++i) {
    // Unquantized, wide-magnitude values so a naive sum would drift.
    double v = std::ldexp(noise(rng), static_cast<int>(rng() % 40) - 20);
    log.emplace_back(i * kSecond, v);
    st.Ingest(id, i * kSecond, v);
  }
  // The 90-day boundary lands mid-minute on day 1.
  const Nanos boundary = kDay + 7 * kHour + 13 * kMinute + 29 * kSecond;
  st.EnforceRetention(boundary + 90 * kDay);
  EXPECT_GT(st.raw_count(id), 0u);
  EXPECT_GT(st.bucket_count(id, 1), 0u);
  for (Nanos res : {kMinute, 5 * kMinute, kHour, kDay}) {
    ExpectSame(st.Query(id, 0, 2 * kDay, res), Oracle(log, 0, 2 * kDay, res));
    ExpectSame(st.Query(id, kDay, kDay + 12 * kHour, res), Oracle(log, kDay, kDay + 12 * kHour, res));
  }
  // Raw-only ranges still answer at 1 s.
  ExpectSame(st.Query(id, kDay + 20 * kHour, kDay + 21 * kHour, kSecond),
             Oracle(log, kDay + 20 * kHour, kDay + 21 * kHour, kSecond));
  // Second resolution over downsampled data is refused.
  EXPECT_EQ(CodeOf([&] { st.Query(id, 0, kHour, kSecond); }), ErrorCode::kInvalidArgument);
}

TEST(Store, CoarseEqualsAggregateOfFine) {
  std::mt19937_64 rng(9);
  Store st;
  SeriesId id = st.Series("s");
  for (int i = 0; i < 20000; ++i) st.Ingest(id, i * kSecond + (rng() % 1000), std::ldexp(1.0 * (rng() % 1000), -7));
  auto fine = st.Query(id, 0, 20000 * kSecond, kMinute);
  auto coarse = st.Query(id, 0, 20000 * kSecond, kHour);
  std::map<Nanos, std::vector<Aggregate>> group;
  for (const auto &a : fine) group[(a.t / kHour) * kHour].push_back(a);
  ASSERT_EQ(group.size(), coarse.size());
  for (const auto &c : coarse) {
    const auto &g = group[c.t];
    std::uint64_t n = 0;
    double lo = INFINITY, hi = -INFINITY;
    std::vector<double> sums;
    for (const auto &a : g) {
      n += a.count;
      lo = std::min(lo, a.min);
      hi = std::max(hi, a.max);
      sums.push_back(a.sum);
    }
    EXPECT_EQ(c.count, n);
    EXPECT_EQ(c.min, lo);
    EXPECT_EQ(c.max, hi);
    // Values are multiples of 2^-7, so every partial sum is exact.
    EXPECT_EQ(c.sum, testing::ExactSumReference(sums));
  }
}

TEST(Store, ChunksHoldRunsOfRegularSamples) {
  Store st;
  SeriesId id = st.Series("s");
  for (int i = 0; i < 10000; ++i) st.Ingest(id, i * kSecond, i);
  st.Ingest(id, 10000 * kSecond + 500, 1);  // off-grid point
  auto raw = st.Raw(id, 9998 * kSecond, 10001 * kSecond);
  ASSERT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw[2].first, 10000 * kSecond + 500);
  EXPECT_EQ(st.Last(id)->second, 1.0);
}

TEST(Store, SaveLoadRoundTrip) {
  Store st;
  SeriesId a = st.Series("a");
  SeriesId b = st.Series("b");
  for (int i = 0; i < 5000; ++i) {
    st.Ingest(a, i * kSecond, i * 0.5);
    st.Ingest(b, i * 3 * kSecond, -i * 0.25);
  }
  st.EnforceRetention(90 * kDay + 2000 * kSecond);
  auto path = (std::filesystem::temp_directory_path() / "fleetops_store_test.bin").string();
  st.Save(path);
  Store back = Store::Load(path);
  for (const char *name : {"a", "b"}) {
    SeriesId x = *st.FindSeries(name), y = *back.FindSeries(name);
    ExpectSame(back.Query(y, 0, 20000 * kSecond, kMinute), st.Query(x, 0, 20000 * kSecond, kMinute));
    EXPECT_EQ(back.raw_count(y), st.raw_count(x));
  }
  {
    std::FILE *f = std::fopen(path.c_str(), "wb");
    std::fputs("not a store", f);
    std::fclose(f);
  }
  EXPECT_EQ(CodeOf([&] { Store::Load(path); }), ErrorCode::kParseError);
  std::filesystem::remove(path);
}

TEST(Alerts, TemperatureHeldFiveMinutesFiresAtThree) {
  AlertEngine e;
  std::vector<AlertEvent> events;
  for (int s = 0; s <= 600; ++s) {
    double v = s < 300 ? 75.0 : 50.0;
    e.Observe(0, "sys01.temp_asic0", "temp_asic0", s * kSecond, v);
    for (auto &ev : e.Evaluate(s * kSecond)) events.push_back(ev);
  }
  ASSERT_EQ(events.size(), 2u);
  EXPECT_TRUE(events[0].firing);
  EXPECT_EQ(events[0].t, 3 * kMinute);
  EXPECT_EQ(events[0].rule, "temperature_high");
  EXPECT_FALSE(events[1].firing);
  EXPECT_EQ(events[1].t, 300 * kSecond);
}

TEST(Alerts, ShortExcursionNeverFires) {
  AlertEngine e;
  for (int s = 0; s <= 600; ++s) {
    e.Observe(0, "sys01.temp_fpga0", "temp_fpga0", s * kSecond, s < 120 ? 80.0 : 40.0);
    EXPECT_TRUE(e.Evaluate(s * kSecond).empty());
  }
}

TEST(Alerts, ProbeRatioFiresImmediatelyAndResolvesNextCycle) {
  AlertEngine e;
  e.Observe(3, "sys04.probe.response_ratio", "probe.response_ratio", 0, 1.0);
  EXPECT_TRUE(e.Evaluate(0).empty());
  e.Observe(3, "sys04.probe.response_ratio", "probe.response_ratio", kMinute, 0.5);
  auto fired = e.Evaluate(kMinute);
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_TRUE(fired[0].firing);
  EXPECT_EQ(e.firing().size(), 1u);
  e.Observe(3, "sys04.probe.response_ratio", "probe.response_ratio", 2 * kMinute, 1.0);
  auto resolved = e.Evaluate(2 * kMinute);
  ASSERT_EQ(resolved.size(), 1u);
  EXPECT_FALSE(resolved[0].firing);
  EXPECT_TRUE(e.firing().empty());
}

TEST(Alerts, SupplyRangeUsesChannelBounds) {
  AlertEngine e;
  e.Observe(0, "sys01.in_6v", "in_6v", 0, 6.0);
  e.Observe(1, "sys01.in_12v", "in_12v", 0, 6.0);
  auto ev = e.Evaluate(0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].series, "sys01.in_12v");
  EXPECT_EQ(ev[0].rule, "supply_out_of_range");
}

TEST(Annotations, PointRangeAndErrors) {
  AnnotationLog log;
  auto id = log.Add({0, 5 * kHour, 5 * kHour, "op", "maintenance drawer R1D2", AnnotationCategory::kMaintenance});
  log.Add({0, kDay, kDay + kHour, "op", "site outage", AnnotationCategory::kPowerOutage});
  auto q = log.Query(4 * kHour, 6 * kHour);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].id, id);
  EXPECT_EQ(log.Query(kDay + 30 * kMinute, 2 * kDay).size(), 1u);
  EXPECT_EQ(CodeOf([&] { log.Add({0, 10, 5, "op", "x", AnnotationCategory::kOther}); }), ErrorCode::kInvalidRange);
  EXPECT_EQ(CodeOf([&] { log.Add({0, 10, 10, "", "x", AnnotationCategory::kOther}); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace fleetops::monitor

namespace fleetops::device {
namespace {

std::shared_ptr<const topology::Topology> Fleet() {
  static auto topo = std::make_shared<const topology::Topology>(topology::Topology::Load(topology::DefaultFleetDocument()));
  return topo;
}

TEST(Channels, SchemaShape) {
  std::set<std::string_view> names;
  int volts = 0, amps = 0, temps = 0, fans = 0, flags = 0;
  for (const auto &c : Channels()) {
    names.insert(c.name);
    EXPECT_LE(c.lo, c.hi);
    switch (c.kind) {
      case ChannelKind::kVoltage: ++volts; break;
      case ChannelKind::kCurrent: ++amps; break;
      case ChannelKind::kTemperature: ++temps; break;
      case ChannelKind::kFan: ++fans; break;
      case ChannelKind::kFlag: ++flags; break;
    }
  }
  EXPECT_EQ(names.size(), 29u);
  EXPECT_EQ(volts, 12);
  EXPECT_EQ(amps, 6);
  EXPECT_EQ(temps, 8);
  EXPECT_EQ(fans, 1);
  EXPECT_EQ(flags, 2);
}

TEST(Device, HealthySamplesInRangeAndQuantized) {
  DeviceModel m(Fleet(), 3);
  double v[kChannelCount];
  for (SystemIndex s = 0; s < 16; ++s)
    for (Nanos t = 0; t < 300 * kSecond; t += kSecond) {
      m.Sample(s, t, v);
      for (int c = 0; c < kChannelCount; ++c) {
        EXPECT_GE(v[c], Channels()[c].lo);
        EXPECT_LE(v[c], Channels()[c].hi);
        EXPECT_EQ(v[c], std::nearbyint(v[c] * 1024) / 1024);
      }
    }
}

TEST(Device, AnalogFaultZeroesOnlyAnalogChannelsOfThatSystem) {
  DeviceModel healthy(Fleet(), 3), faulted(Fleet(), 3);
  SystemIndex s3 = *Fleet()->FindSystem("sys03");
  faulted.Cut({faulted.AnalogComponent(s3)});
  double a[kChannelCount], b[kChannelCount];
  for (SystemIndex s = 0; s < 16; ++s) {
    healthy.Sample(s, 42 * kSecond, a);
    faulted.Sample(s, 42 * kSecond, b);
    for (int c = 0; c < kChannelCount; ++c) {
      if (s != s3 || !Channels()[c].analog) {
        EXPECT_EQ(a[c], b[c]);
      } else if (Channels()[c].kind == ChannelKind::kVoltage) {
        EXPECT_LT(b[c], 0.01);
      }
    }
  }
  EXPECT_FALSE(faulted.Check(s3, 0).asic_supplies_ok);
  EXPECT_TRUE(faulted.Check(s3, 0).sram_ok);
  EXPECT_LT(faulted.FidelityAccuracy(s3, 0), 0.90);
}

TEST(Device, PowerRefcountAndRevert) {
  DeviceModel m(Fleet(), 1);
  auto before = m.PowerSnapshot();
  ComponentId c = *m.FindComponent("sys03.ctrl");
  EXPECT_EQ(m.Cut({c}).size(), 1u);
  EXPECT_TRUE(m.Cut({c}).empty());  // overlapping fault
  EXPECT_FALSE(m.telemetry_up(2));
  EXPECT_TRUE(m.Restore({c}).empty());
  EXPECT_EQ(m.Restore({c}).size(), 1u);
  EXPECT_EQ(m.PowerSnapshot(), before);
  EXPECT_THROW(m.Restore({c}), Error);
  EXPECT_EQ(m.ComponentName(*m.FindComponent("sys16.asic_analog")), "sys16.asic_analog");
  EXPECT_FALSE(m.FindComponent("sys17.asic_analog"));
}

TEST(Device, HealthAndFidelityBand) {
  DeviceModel m(Fleet(), 8);
  m.LoadBitfile(4, "bf-abc");
  HealthReport r = m.Check(4, kHour);
  EXPECT_TRUE(r.sram_ok && r.highspeed_links_ok && r.asic_supplies_ok);
  EXPECT_EQ(r.fpga_design_revision, "bf-abc");
  for (Nanos t = 0; t < 100 * kDay; t += kDay) {
    double acc = m.FidelityAccuracy(0, t);
    EXPECT_GE(acc, 0.90);
    EXPECT_LE(acc, 0.99);
  }
  m.Hang(2);
  EXPECT_FALSE(m.telemetry_up(2));
  m.Unhang(2);
  EXPECT_TRUE(m.telemetry_up(2));
}

}  // namespace
}  // namespace fleetops::device
