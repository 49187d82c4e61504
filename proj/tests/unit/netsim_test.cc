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

#include <random>

#include "common/error.h"
#include "netsim/network.h"
#include "netsim/port_scheduler.h"
#include "topology/topology.h"
#include "unit/oracles.h"

namespace fleetops::netsim {
namespace {

using nlohmann::json;
using topology::Topology;

std::array<std::uint32_t, kVlanCount> Quanta(std::uint32_t v1, std::uint32_t v2, std::uint32_t v3, std::uint32_t v4) {
  return {v1, v2, v3, v4};
}

TEST(DrrSelect, HandExecutedTwoQueueRound) {
  PortScheduler s(Quanta(1000, 1000, 1000, 9000), 1 << 20);
  // v4 enqueued first, so it leads the round.
  ASSERT_TRUE(s.Enqueue(Vlan::kExperimentData, {1, 1500}));
  ASSERT_TRUE(s.Enqueue(Vlan::kSystemMgmt, {2, 64}));
  auto a = s.Select();
  ASSERT_TRUE(a);
  EXPECT_EQ(a->first, Vlan::kExperimentData);
  EXPECT_EQ(a->second.frame, 1u);
  // v4 emptied: deficit reset, left the active list.
  EXPECT_EQ(s.deficit(Vlan::kExperimentData), 0u);
  auto b = s.Select();
  ASSERT_TRUE(b);
  EXPECT_EQ(b->first, Vlan::kSystemMgmt);
  EXPECT_EQ(s.deficit(Vlan::kSystemMgmt), 0u);
  EXPECT_FALSE(s.Select());
}

TEST(DrrSelect, SingleQueueIgnoresQuantum) {
  PortScheduler s(Quanta(100, 100, 100, 100), 1 << 20);
  ASSERT_TRUE(s.Enqueue(Vlan::kInfraMgmt, {7, 9000}));
  auto a = s.Select();
  ASSERT_TRUE(a);
  EXPECT_EQ(a->second.frame, 7u);
}

TEST(DrrSelect, EmptyIsIdle) {
  PortScheduler s(Quanta(1, 1, 1, 1), 1 << 20);
  EXPECT_FALSE(s.Select());
  EXPECT_TRUE(s.Empty());
}

TEST(DrrSelect, TailDropAtByteBound) {
  PortScheduler s(Quanta(1, 1, 1, 1), 3000);
  EXPECT_TRUE(s.Enqueue(Vlan::kExperimentData, {1, 1500}));
  EXPECT_TRUE(s.Enqueue(Vlan::kExperimentData, {2, 1500}));
  EXPECT_FALSE(s.Enqueue(Vlan::kExperimentData, {3, 1500}));
  EXPECT_TRUE(s.Enqueue(Vlan::kSystemMgmt, {4, 1500}));
}

TEST(DrrSelect, ByteSharesFollowQuanta) {
  // Saturated queues over many rounds: bytes served per VLAN track quanta.
  PortScheduler s(Quanta(1000, 2000, 3000, 12000), 1 << 30);
  std::array<std::uint64_t, 4> served{};
  std::uint32_t id = 0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 2000; ++k) s.Enqueue(topology::kAllVlans[i], {id++, 1500});
  for (int n = 0; n < 3000; ++n) {
    auto e = s.Select();
    ASSERT_TRUE(e);
    served[topology::VlanIndex(e->first)] += e->second.bytes;
  }
  double total = served[0] + served[1] + served[2] + served[3];
  EXPECT_NEAR(served[3] / total, 12.0 / 18.0, 0.01);
  EXPECT_NEAR(served[0] / total, 1.0 / 18.0, 0.01);
}

// h1 -(10G)- sw -(cap)- h2, all ports trunk {1,2,3,4}.
std::shared_ptr<const Topology> Dumbbell(double bottleneck, double access = 1e10) {
  json doc = {{"nodes",
               {{{"id", "h1"}, {"kind", "ClusterNode"}},
                {{"id", "h2"}, {"kind", "ClusterNode"}},
                {{"id", "sw"}, {"kind", "CoreSwitch"}}}},
              {"links",
               {{{"a", "h1"}, {"b", "sw"}, {"b_port", "p1"}, {"capacity_bps", access}},
                {{"a", "sw"}, {"a_port", "p2"}, {"b", "h2"}, {"capacity_bps", bottleneck}}}},
              {"port_modes",
               {{{"node", "sw"}, {"port", "p1"}, {"mode", "trunk"}, {"vlans", {1, 2, 3, 4}}},
                {{"node", "sw"}, {"port", "p2"}, {"mode", "trunk"}, {"vlans", {1, 2, 3, 4}}}}}};
  return std::make_shared<Topology>(Topology::Load(doc));
}

struct Rig {
  explicit Rig(std::shared_ptr<const Topology> t, NetConfig cfg = {}) : topo(std::move(t)), net(topo, cfg, loop) {}
  topology::NodeIndex N(const char *id) const { return topo->NodeByName(id); }
  std::shared_ptr<const Topology> topo;
  EventLoop loop;
  Network net;
};

TEST(RunUntil, NoFlowsAllZero) {
  Rig r(Dumbbell(1e9));
  const SimStats &s = r.net.RunUntil(10 * kSecond);
  EXPECT_EQ(s.offered_bytes, 0u);
  EXPECT_EQ(s.delivered_bytes, 0u);
  for (const auto &p : s.ports) EXPECT_EQ(p.busy, 0);
  EXPECT_EQ(r.loop.now(), 10 * kSecond);
}

TEST(RunUntil, UnderSubscribedConstantRate) {
  Rig r(Dumbbell(1e9, 1e9));
  FlowSpec f{"f", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kConstantRate, 500e6, 1500, 0};
  FlowId id = r.net.AddFlow(f);
  const SimStats &s = r.net.RunUntil(10 * kSecond);
  double want = 500e6 * 10 / 8;  // bytes
  EXPECT_NEAR(static_cast<double>(s.flows[id].delivered_bytes), want, 1500);
  EXPECT_EQ(s.flows[id].total_dropped(), 0u);
}

TEST(RunUntil, TwoBackloggedFlowsSplitEqually) {
  NetConfig cfg;
  cfg.vlan_shares = {0.25, 0.25, 0.25, 0.25};
  Rig r(Dumbbell(1e10, 1e11), cfg);
  FlowId a = r.net.AddFlow({"a", r.N("h1"), r.N("h2"), Vlan::kSystemMgmt, FlowMode::kBacklogged, 0, 1500, 0});
  FlowId b = r.net.AddFlow({"b", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kBacklogged, 0, 1500, 0});
  const SimStats &s = r.net.RunUntil(200 * kMillisecond);
  auto ra = MeasureFlow(s, a, 50 * kMillisecond, 200 * kMillisecond);
  auto rb = MeasureFlow(s, b, 50 * kMillisecond, 200 * kMillisecond);
  EXPECT_NEAR(ra.throughput_bps, 5e9, 0.05 * 5e9);
  EXPECT_NEAR(rb.throughput_bps, 5e9, 0.05 * 5e9);
}

TEST(MeasureFlow, BackloggedAloneOnGigabit) {
  // 1500 B at 1 Gb/s is 12 us per frame; a backlogged source keeps the wire
  // busy, so only the pipeline fill is lost: >= 0.98 * 1e9.
  Rig r(Dumbbell(1e9, 1e9));
  FlowId id = r.net.AddFlow({"bl", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kBacklogged, 0, 1500, 0});
  const SimStats &s = r.net.RunUntil(kSecond);
  auto rep = MeasureFlow(s, id, 0, kSecond);
  EXPECT_GE(rep.throughput_bps, 0.98e9);
  EXPECT_LE(rep.throughput_bps, 1e9);
}

TEST(MeasureFlow, WindowBeforeStartIsZero) {
  Rig r(Dumbbell(1e9));
  FlowId id = r.net.AddFlow(
      {"late", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kConstantRate, 1e8, 1500, 5 * kSecond});
  const SimStats &s = r.net.RunUntil(6 * kSecond);
  EXPECT_EQ(MeasureFlow(s, id, 0, 4 * kSecond).throughput_bps, 0.0);
  EXPECT_GT(MeasureFlow(s, id, 5 * kSecond, 6 * kSecond).throughput_bps, 0.0);
}

TEST(MeasureFlow, Errors) {
  Rig r(Dumbbell(1e9));
  const SimStats &s = r.net.RunUntil(kSecond);
  EXPECT_THROW(MeasureFlow(s, FlowId{3}, 0, kSecond), Error);
  EXPECT_THROW(MeasureFlow(s, "nope", 0, kSecond), Error);
}

TEST(MinimumGuarantee, FluidOracleOnRandomQuanta) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> share(0.05, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    NetConfig cfg;
    std::vector<double> weights;
    for (int i = 0; i < kVlanCount; ++i) cfg.vlan_shares[i] = share(rng);
    // A random subset (at least two) of VLANs is backlogged.
    std::vector<int> active;
    for (int i = 0; i < kVlanCount; ++i)
      if (rng() % 3 != 0) active.push_back(i);
    if (active.size() < 2) active = {0, 3};
    Rig r(Dumbbell(1e9, 1e10), cfg);
    auto quanta = cfg.Quanta();
    std::vector<FlowId> ids;
    std::vector<double> w, demand;
    for (int i : active) {
      ids.push_back(r.net.AddFlow({"v" + std::to_string(i + 1), r.N("h1"), r.N("h2"), topology::kAllVlans[i],
                                   FlowMode::kBacklogged, 0, 1500, 0}));
      w.push_back(quanta[i]);
      demand.push_back(std::numeric_limits<double>::infinity());
    }
    const SimStats &s = r.net.RunUntil(300 * kMillisecond);
    auto fluid = testing::FluidShares(1e9, w, demand);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      double got = MeasureFlow(s, ids[k], 100 * kMillisecond, 300 * kMillisecond).throughput_bps;
      EXPECT_NEAR(got, fluid[k], 0.05 * fluid[k]) << "trial " << trial << " vlan " << active[k] + 1;
    }
  }
}

TEST(WorkConservation, BottleneckStaysBusy) {
  Rig r(Dumbbell(1e9, 1e10));
  r.net.AddFlow({"a", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kBacklogged, 0, 1500, 0});
  r.net.AddFlow({"b", r.N("h1"), r.N("h2"), Vlan::kInfraMgmt, FlowMode::kConstantRate, 3e8, 700, 0});
  const SimStats &s = r.net.RunUntil(100 * kMillisecond);
  auto d = topology::Directed(*r.topo->FindLink("sw/p2--h2/eth0"), false);
  EXPECT_GT(s.Utilization(d), 0.999);
  EXPECT_LE(s.Utilization(d), 1.0);
}

TEST(Conservation, OfferedEqualsDeliveredDroppedInFlight) {
  NetConfig cfg;
  cfg.queue_limit_bytes = 16 * 1024;  // force drops
  Rig r(Dumbbell(1e9, 1e10), cfg);
  r.net.AddFlow({"hog", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kConstantRate, 2e9, 1500, 0});
  r.net.AddFlow({"mgmt", r.N("h1"), r.N("h2"), Vlan::kSystemMgmt, FlowMode::kConstantRate, 5e7, 200, 0});
  for (Nanos t = kMillisecond; t <= 50 * kMillisecond; t += 7 * kMillisecond + 13) {
    const SimStats &s = r.net.RunUntil(t);
    EXPECT_EQ(s.offered_bytes, s.delivered_bytes + s.dropped_bytes + r.net.in_flight_bytes());
  }
  EXPECT_GT(r.net.stats().dropped_bytes, 0u);
}

TEST(ProbeRtt, IdleFourHopPath) {
  auto topo = std::make_shared<Topology>(Topology::Load(topology::DefaultFleetDocument()));
  Rig r(topo);
  std::optional<ProbeResult> got;
  r.net.SendProbe(r.N("monitor"), r.N("sys05.fpga0"), Vlan::kExperimentData,
                  [&](const ProbeResult &p) { got = p; });
  r.net.RunUntil(2 * kSecond);
  ASSERT_TRUE(got);
  ASSERT_TRUE(got->replied);
  // Oracle: per-hop serialization of 64 B (10G, 100G, 10G, 1G) plus 1 us
  // propagation, both directions: 2 * (4000 + 51.2 + 5.12 + 51.2 + 512) ns.
  const double want = 2 * (4000 + 51.2 + 5.12 + 51.2 + 512);
  EXPECT_NEAR(static_cast<double>(got->rtt), want, 4.0);
}

TEST(ProbeRtt, PoweredOffTargetTimesOut) {
  auto topo = std::make_shared<Topology>(Topology::Load(topology::DefaultFleetDocument()));
  Rig r(topo);
  r.net.SetNodePowered(r.N("sys05.fpga0"), false);
  std::optional<ProbeResult> got;
  Nanos at = -1;
  r.net.SendProbe(r.N("monitor"), r.N("sys05.fpga0"), Vlan::kExperimentData, [&](const ProbeResult &p) {
    got = p;
    at = r.loop.now();
  });
  r.net.RunUntil(3 * kSecond);
  ASSERT_TRUE(got);
  EXPECT_FALSE(got->replied);
  EXPECT_EQ(at, kSecond);
}

TEST(Firewall, DeniedAtFirstHop) {
  auto topo = std::make_shared<Topology>(Topology::Load(topology::DefaultFleetDocument()));
  Rig r(topo);
  std::vector<FrameEvent> events;
  r.net.SetFrameObserver([&](const FrameEvent &e) { events.push_back(e); });
  r.net.SetFirewall([](const FrameHeader &) { return false; });
  FlowId id = r.net.AddFlow({"x", r.N("node01"), r.N("sys01.fpga0"), Vlan::kExperimentData,
                             FlowMode::kConstantRate, 1.2e6, 1500, 0, kSecond / 100});
  const SimStats &s = r.net.RunUntil(kSecond);
  EXPECT_EQ(s.flows[id].delivered_frames, 0u);
  EXPECT_EQ(s.flows[id].dropped_frames[static_cast<int>(DropCause::kFirewall)], s.flows[id].offered_frames);
  ASSERT_FALSE(events.empty());
  for (const auto &e : events) {
    EXPECT_EQ(e.kind, FrameEvent::Kind::kFirewallDropped);
    // First routed hop is the core switch: one hop of 1500 B at 100G + 1 us.
    EXPECT_EQ(e.first_hop_time - e.enqueue_time, 120 + 1000);
  }
}

TEST(LinkDown, DropsAndReroutesNothingOnTree) {
  auto topo = std::make_shared<Topology>(Topology::Load(topology::DefaultFleetDocument()));
  Rig r(topo);
  auto uplink = *topo->FindLink("spine-hall/q2-1--leaf-r1d1/sfp1");
  r.net.SetLinkUp(uplink, false);
  std::optional<ProbeResult> got;
  r.net.SendProbe(r.N("monitor"), r.N("sys01.fpga0"), Vlan::kExperimentData, [&](const ProbeResult &p) { got = p; });
  r.net.RunUntil(2 * kSecond);
  ASSERT_TRUE(got);
  EXPECT_FALSE(got->replied);
}

TEST(Determinism, SameInputsSameTraceHash) {
  auto run = [] {
    Rig r(Dumbbell(1e9, 1e10));
    r.net.AddFlow({"a", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kBacklogged, 0, 1500, 0});
    r.net.AddFlow({"b", r.N("h1"), r.N("h2"), Vlan::kSystemMgmt, FlowMode::kConstantRate, 1e8, 333, 0});
    r.net.RunUntil(20 * kMillisecond);
    return r.loop.trace_hash();
  };
  EXPECT_EQ(run(), run());
}

TEST(Flow, RejectsBadFrameSize) {
  Rig r(Dumbbell(1e9));
  EXPECT_THROW(r.net.AddFlow({"tiny", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kBacklogged, 0, 63, 0}),
               Error);
  EXPECT_THROW(
      r.net.AddFlow({"zero", r.N("h1"), r.N("h2"), Vlan::kExperimentData, FlowMode::kConstantRate, 0, 1500, 0}), Error);
}

}  // namespace
}  // namespace fleetops::netsim
