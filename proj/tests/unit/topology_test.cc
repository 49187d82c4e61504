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

#include <fstream>
#include <map>

#include "common/error.h"
#include "topology/routing.h"
#include "topology/topology.h"
#include "topology/validate.h"
#include "unit/oracles.h"

namespace fleetops::topology {
namespace {

using nlohmann::json;

Topology DefaultFleet() { return Topology::Load(DefaultFleetDocument()); }

int CountKind(const Topology &t, NodeKind k) {
  int n = 0;
  for (const auto &node : t.nodes()) n += node.kind == k;
  return n;
}

TEST(TopologyLoad, DefaultFleetComposition) {
  Topology t = DefaultFleet();
  EXPECT_EQ(CountKind(t, NodeKind::kCoreSwitch), 1);
  EXPECT_EQ(CountKind(t, NodeKind::kSpineSwitch), 2);
  EXPECT_EQ(CountKind(t, NodeKind::kLeafSwitch), 8);
  EXPECT_EQ(t.systems().size(), 16u);
  EXPECT_EQ(t.racks().size(), 2u);
  EXPECT_EQ(t.drawers().size(), 8u);
  int productive = 0;
  for (const auto &s : t.systems()) productive += s.productive;
  EXPECT_EQ(productive, 13);
  // system -> drawer -> rack index.
  const System &sys3 = t.systems()[*t.FindSystem("sys03")];
  EXPECT_EQ(t.drawers()[sys3.drawer].id, "R1D2");
  EXPECT_EQ(t.racks()[t.drawers()[sys3.drawer].rack].id, "R1");
}

TEST(TopologyLoad, ShippedDocumentMatchesGenerator) {
  std::ifstream in(std::string(FLEETOPS_DATA_DIR) + "/topologies/default_fleet.json");
  ASSERT_TRUE(in.good());
  EXPECT_EQ(json::parse(in), DefaultFleetDocument());
}

TEST(TopologyLoad, EmptyNodeListIsFlagged) {
  Topology t = Topology::Load(json{{"nodes", json::array()}});
  EXPECT_TRUE(t.systems().empty());
  auto v = ValidateTopology(t);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].kind, ViolationKind::kEmptyTopology);
}

TEST(TopologyLoad, DanglingLink) {
  json doc = DefaultFleetDocument();
  doc["links"].push_back({{"a", "core"}, {"a_port", "q31"}, {"b", "ghost"}, {"capacity_bps", 1e9}});
  try {
    Topology::Load(doc);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDanglingReference);
  }
}

TEST(TopologyLoad, MalformedDocument) {
  json doc = {{"nodes", {{{"id", "x"}, {"kind", "Toaster"}}}}};
  try {
    Topology::Load(doc);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST(TopologyValidate, DefaultFleetIsValid) {
  auto v = ValidateTopology(DefaultFleet());
  for (const auto &x : v) ADD_FAILURE() << ViolationKindName(x.kind) << " " << x.subject << ": " << x.message;
}

TEST(TopologyValidate, DrawerWithTwoFeeds) {
  json doc = DefaultFleetDocument();
  doc["racks"][0]["drawers"][1]["dc12_feeds"].push_back("R1D2.dc12b");
  auto v = ValidateTopology(Topology::Load(doc));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kPowerCompositionViolation);
  EXPECT_EQ(v[0].subject, "R1D2");
}

TEST(TopologyValidate, TrunkOnDevicePort) {
  json doc = DefaultFleetDocument();
  for (auto &pm : doc["port_modes"]) {
    if (pm["node"] == "leaf-r1d1" && pm["port"] == "ge2") {
      pm = {{"node", "leaf-r1d1"}, {"port", "ge2"}, {"mode", "trunk"}, {"vlans", {4}}};
    }
  }
  auto v = ValidateTopology(Topology::Load(doc));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kPortModeViolation);
}

TEST(TopologyValidate, SharedAnalogFeedBreaksIndependence) {
  json doc = DefaultFleetDocument();
  doc["racks"][0]["drawers"][0]["systems"][1]["analog_feed"] = "sys01.ac6";
  auto v = ValidateTopology(Topology::Load(doc));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kPowerCompositionViolation);
}

TEST(TopologyValidate, ExperimentVlanMissingOnTrunk) {
  json doc = DefaultFleetDocument();
  for (auto &pm : doc["port_modes"]) {
    if (pm["node"] == "spine-hall" && pm["port"] == "q2-1") pm["vlans"] = {1, 2, 3};
  }
  auto v = ValidateTopology(Topology::Load(doc));
  ASSERT_FALSE(v.empty());
  for (const auto &x : v) EXPECT_EQ(x.kind, ViolationKind::kVlanProvisioningViolation);
}

TEST(TopologyValidate, TieringMismatch) {
  json doc = DefaultFleetDocument();
  for (auto &l : doc["links"])
    if (l["a"] == "spine-hall" && l["b"] == "leaf-r2d4") l["capacity_bps"] = 1e9;
  auto v = ValidateTopology(Topology::Load(doc));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::kTieringViolation);
}

TEST(ResolvePath, ClusterNodeToFpga) {
  Topology t = DefaultFleet();
  Path p = ResolvePath(t, t.NodeByName("node01"), t.NodeByName("sys05.fpga0"), Vlan::kExperimentData);
  ASSERT_EQ(p.size(), 4u);
  std::vector<std::string> hops;
  for (DirectedLink d : p) hops.push_back(t.node(t.Target(d)).id);
  EXPECT_EQ(hops, (std::vector<std::string>{"core", "spine-hall", "leaf-r1d3", "sys05.fpga0"}));
}

TEST(ResolvePath, VlanMismatchHasNoPath) {
  Topology t = DefaultFleet();
  try {
    ResolvePath(t, t.NodeByName("node01"), t.NodeByName("sys05.fpga0"), Vlan::kInfraMgmt);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoPath);
  }
}

TEST(ResolvePath, IdentityIsEmpty) {
  Topology t = DefaultFleet();
  NodeIndex n = t.NodeByName("sys01.ctrl");
  EXPECT_TRUE(ResolvePath(t, n, n, Vlan::kSystemMgmt).empty());
}

TEST(ResolvePath, LexicographicTieBreak) {
  // Two equal-length routes a -> {s2, s1} -> b; s1 must win.
  json doc = {{"nodes",
               {{{"id", "a"}, {"kind", "ClusterNode"}},
                {{"id", "b"}, {"kind", "ClusterNode"}},
                {{"id", "core"}, {"kind", "CoreSwitch"}},
                {{"id", "s2"}, {"kind", "SpineSwitch"}},
                {{"id", "s1"}, {"kind", "SpineSwitch"}}}},
              {"links",
               {{{"a", "a"}, {"b", "core"}, {"b_port", "p1"}, {"capacity_bps", 1e9}},
                {{"a", "core"}, {"a_port", "p2"}, {"b", "s2"}, {"b_port", "p1"}, {"capacity_bps", 1e9}},
                {{"a", "core"}, {"a_port", "p3"}, {"b", "s1"}, {"b_port", "p1"}, {"capacity_bps", 1e9}},
                {{"a", "s2"}, {"a_port", "p2"}, {"b", "b"}, {"capacity_bps", 1e9}},
                {{"a", "s1"}, {"a_port", "p2"}, {"b", "b"}, {"capacity_bps", 1e9}}}},
              {"port_modes", json::array()}};
  for (auto [n, p] : std::vector<std::pair<std::string, std::string>>{
           {"core", "p1"}, {"core", "p2"}, {"core", "p3"}, {"s1", "p1"}, {"s1", "p2"}, {"s2", "p1"}, {"s2", "p2"}}) {
    doc["port_modes"].push_back({{"node", n}, {"port", p}, {"mode", "trunk"}, {"vlans", {4}}});
  }
  Topology t = Topology::Load(doc);
  Path p = ResolvePath(t, t.NodeByName("a"), t.NodeByName("b"), Vlan::kExperimentData);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(t.node(t.Target(p[1])).id, "s1");
}

TEST(ResolvePath, MatchesBruteForceEnumerationAndIsSymmetric) {
  json doc = DefaultFleetDocument();
  Topology t = Topology::Load(doc);
  auto edges = testing::EdgesFromDocument(doc);
  auto fwd = testing::SwitchesFromDocument(doc);
  std::vector<std::string> endpoints = {"node01", "node26", "monitor", "labnode02", "pdu-r2"};
  for (const auto &s : t.systems()) {
    endpoints.push_back(t.node(s.fpgas[0]).id);
    endpoints.push_back(t.node(*s.controller).id);
  }
  for (Vlan v : kAllVlans) {
    for (const auto &a : endpoints) {
      for (const auto &b : endpoints) {
        auto ref = testing::EnumeratePaths(edges, fwd, a, b, VlanNumber(v));
        std::size_t shortest = SIZE_MAX;
        for (const auto &p : ref) shortest = std::min(shortest, p.size() - 1);
        NodeIndex na = t.NodeByName(a), nb = t.NodeByName(b);
        if (ref.empty()) {
          EXPECT_THROW(ResolvePath(t, na, nb, v), Error) << a << "->" << b;
          continue;
        }
        auto fwd_path = ResolvePath(t, na, nb, v);
        auto rev_path = ResolvePath(t, nb, na, v);
        EXPECT_EQ(fwd_path.size(), shortest) << a << "->" << b << " vlan " << VlanNumber(v);
        EXPECT_EQ(fwd_path.size(), rev_path.size());
      }
    }
  }
}

TEST(Composition, EverySystemHasThreeAccessPorts) {
  Topology t = DefaultFleet();
  for (const auto &sys : t.systems()) {
    NodeIndex leaf = *t.drawers()[sys.drawer].leaf;
    int v3 = 0, v4 = 0;
    std::vector<NodeIndex> devices = sys.fpgas;
    devices.push_back(*sys.controller);
    for (const auto &adj : t.adjacent(leaf)) {
      if (std::find(devices.begin(), devices.end(), adj.peer) == devices.end()) continue;
      const Link &l = t.link(adj.link);
      const PortMode *m = l.EffectiveMode(l.b.node == leaf);
      ASSERT_NE(m, nullptr);
      ASSERT_EQ(m->kind, PortMode::Kind::kAccessUntagged);
      v3 += m->Carries(Vlan::kSystemMgmt);
      v4 += m->Carries(Vlan::kExperimentData);
    }
    EXPECT_EQ(v3, 1) << sys.id;
    EXPECT_EQ(v4, 2) << sys.id;
  }
}

std::vector<OfferedLoad> LineRateLoad(const Topology &t) {
  std::vector<OfferedLoad> load;
  for (std::size_t i = 0; i < t.systems().size(); ++i) {
    char node[16];
    std::snprintf(node, sizeof(node), "node%02zu", i % 26 + 1);
    NodeIndex n = t.NodeByName(node);
    NodeIndex f = t.systems()[i].fpgas[0];
    load.push_back({n, f, Vlan::kExperimentData, 1e9});
    load.push_back({f, n, Vlan::kExperimentData, 1e9});
  }
  return load;
}

TEST(AggregateDemand, AllSystemsAtLineRate) {
  json doc = DefaultFleetDocument();
  Topology t = Topology::Load(doc);
  auto demand = AggregateDemand(t, LineRateLoad(t));
  EXPECT_TRUE(demand.oversubscribed.empty());

  // Oracle: brute-force path enumeration per flow, summed per directed edge.
  auto edges = testing::EdgesFromDocument(doc);
  auto fwd = testing::SwitchesFromDocument(doc);
  std::map<std::pair<std::string, std::string>, double> ref;
  for (const auto &l : LineRateLoad(t)) {
    auto paths = testing::EnumeratePaths(edges, fwd, t.node(l.src).id, t.node(l.dst).id, 4);
    ASSERT_EQ(paths.size(), 1u);  // tree: unique path
    for (std::size_t i = 0; i + 1 < paths[0].size(); ++i) ref[{paths[0][i], paths[0][i + 1]}] += l.rate_bps;
  }
  for (DirectedLink d = 0; d < demand.demand_bps.size(); ++d) {
    auto key = std::make_pair(t.node(t.Source(d)).id, t.node(t.Target(d)).id);
    double want = ref.count(key) ? ref[key] : 0.0;
    EXPECT_DOUBLE_EQ(demand.Demand(d), want) << t.DirectedName(d);
  }
  // Frozen values from the enumeration above.
  for (const auto &drawer : t.drawers()) {
    NodeIndex leaf = *drawer.leaf;
    for (const auto &adj : t.adjacent(leaf)) {
      if (t.node(adj.peer).kind != NodeKind::kSpineSwitch) continue;
      EXPECT_DOUBLE_EQ(demand.Demand(adj.outgoing), 2e9);
      EXPECT_DOUBLE_EQ(demand.Demand(adj.outgoing ^ 1u), 2e9);
    }
  }
  auto core_spine = t.FindLink("core/q29--spine-hall/q1");
  ASSERT_TRUE(core_spine);
  EXPECT_DOUBLE_EQ(demand.Demand(Directed(*core_spine, false)), 16e9);
  EXPECT_DOUBLE_EQ(demand.Demand(Directed(*core_spine, true)), 16e9);
}

TEST(AggregateDemand, ZeroLoad) {
  Topology t = DefaultFleet();
  auto demand = AggregateDemand(t, {});
  for (double d : demand.demand_bps) EXPECT_EQ(d, 0.0);
  EXPECT_TRUE(demand.oversubscribed.empty());
}

TEST(AggregateDemand, SingleFlowTouchesFourLinks) {
  Topology t = DefaultFleet();
  auto demand = AggregateDemand(t, {{t.NodeByName("node03"), t.NodeByName("sys10.fpga1"), Vlan::kExperimentData, 1e9}});
  int loaded = 0;
  for (double d : demand.demand_bps) {
    if (d == 0) continue;
    ++loaded;
    EXPECT_EQ(d, 1e9);
  }
  EXPECT_EQ(loaded, 4);
}

TEST(AggregateDemand, OversubscriptionIsFlagged) {
  Topology t = DefaultFleet();
  NodeIndex f = t.NodeByName("sys01.fpga0");
  auto demand = AggregateDemand(t, {{t.NodeByName("node01"), f, Vlan::kExperimentData, 1e9},
                                    {t.NodeByName("node02"), f, Vlan::kExperimentData, 1e9}});
  ASSERT_EQ(demand.oversubscribed.size(), 1u);
  EXPECT_EQ(t.node(t.Target(demand.oversubscribed[0])).id, "sys01.fpga0");
}

}  // namespace
}  // namespace fleetops::topology
