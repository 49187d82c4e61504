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

#include <cstdio>
#include <string>

#include "topology/topology.h"

namespace fleetops::topology {

using nlohmann::json;

namespace {

// Port-count assumptions: core FM3032Q has 32 QSFP ports (q1..q32); spine
// CRS504-4XQ has 4 QSFP28 ports, two of them used as 4x10G breakouts; leaf
// CRS326-24G-2S has 24 GbE ports (ge1..ge24) and 2 SFP+ uplinks.
constexpr int kClusterNodes = 26;
constexpr int kRacks = 2;
constexpr int kDrawersPerRack = 4;
constexpr int kSystemsPerDrawer = 2;
constexpr int kProductiveSystems = 13;
constexpr int kLabNodes = 2;

constexpr double k1G = 1e9;
constexpr double k10G = 1e10;
constexpr double k100G = 1e11;
constexpr double kPropagation = 1e-6;

std::string Numbered(const char *prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, n);
  return buf;
}

const std::vector<int> kAllVlanIds = {1, 2, 3, 4};

}  // namespace

json DefaultFleetDocument() {
  json nodes = json::array();
  json links = json::array();
  json modes = json::array();

  auto add_node = [&](const std::string &id, const char *kind, const char *loc) {
    nodes.push_back({{"id", id}, {"kind", kind}, {"location", loc}});
  };
  auto trunk = [&](const std::string &node, const std::string &port, const std::vector<int> &vlans) {
    modes.push_back({{"node", node}, {"port", port}, {"mode", "trunk"}, {"vlans", vlans}});
  };
  auto access = [&](const std::string &node, const std::string &port, int vlan) {
    modes.push_back({{"node", node}, {"port", port}, {"mode", "access"}, {"vlan", vlan}});
  };
  auto link = [&](const std::string &a, const std::string &a_port, const std::string &b, const std::string &b_port,
                  double capacity) {
    links.push_back({{"id", a + "/" + a_port + "--" + b + "/" + b_port},
                     {"a", a},
                     {"a_port", a_port},
                     {"b", b},
                     {"b_port", b_port},
                     {"capacity_bps", capacity},
                     {"propagation_s", kPropagation}});
  };

  add_node("core", "CoreSwitch", "ServerRoom");
  for (int i = 1; i <= kClusterNodes; ++i) {
    std::string node = Numbered("node", i);
    std::string port = "q" + std::to_string(i);
    add_node(node, "ClusterNode", "ServerRoom");
    link(node, "eth0", "core", port, k100G);
    trunk("core", port, {2, 4});
    trunk(node, "eth0", {2, 4});
  }
  add_node("monitor", "CentralMonitorHost", "ServerRoom");
  link("monitor", "eth0", "core", "q27", k10G);
  trunk("core", "q27", kAllVlanIds);
  trunk("monitor", "eth0", kAllVlanIds);

  add_node("spine-hall", "SpineSwitch", "MachineHall");
  link("core", "q29", "spine-hall", "q1", k100G);
  trunk("core", "q29", kAllVlanIds);
  trunk("spine-hall", "q1", kAllVlanIds);

  add_node("spine-lab", "SpineSwitch", "Laboratory");
  link("core", "q30", "spine-lab", "q1", k100G);
  trunk("core", "q30", kAllVlanIds);
  trunk("spine-lab", "q1", kAllVlanIds);
  for (int i = 1; i <= kLabNodes; ++i) {
    std::string node = Numbered("labnode", i);
    std::string port = "q2-" + std::to_string(i);
    add_node(node, "RemoteClusterNode", "Laboratory");
    link(node, "eth0", "spine-lab", port, k10G);
    trunk("spine-lab", port, {2, 4});
    trunk(node, "eth0", {2, 4});
  }

  json racks = json::array();
  int system_no = 0;
  int leg = 0;
  for (int r = 1; r <= kRacks; ++r) {
    std::string rack_id = "R" + std::to_string(r);
    json rack = {{"id", rack_id}, {"location", "MachineHall"}, {"drawers", json::array()}};
    std::string pdu = "pdu-r" + std::to_string(r);
    add_node(pdu, "Pdu", "MachineHall");
    for (int d = 1; d <= kDrawersPerRack; ++d) {
      std::string drawer_id = rack_id + "D" + std::to_string(d);
      std::string leaf = "leaf-r" + std::to_string(r) + "d" + std::to_string(d);
      add_node(leaf, "LeafSwitch", "MachineHall");
      // Breakout legs q2-1..q2-4 and q3-1..q3-4, one per drawer.
      std::string spine_port = "q" + std::to_string(2 + leg / 4) + "-" + std::to_string(1 + leg % 4);
      ++leg;
      link("spine-hall", spine_port, leaf, "sfp1", k10G);
      trunk("spine-hall", spine_port, kAllVlanIds);
      trunk(leaf, "sfp1", kAllVlanIds);
      if (d == 1) {
        link(leaf, "ge24", pdu, "eth0", k1G);
        access(leaf, "ge24", 1);
      }

      json drawer = {{"id", drawer_id},
                     {"leaf", leaf},
                     {"dc12_feeds", {drawer_id + ".dc12"}},
                     {"systems", json::array()}};
      int port = 1;
      for (int s = 0; s < kSystemsPerDrawer; ++s) {
        ++system_no;
        std::string sys = Numbered("sys", system_no);
        std::string ctrl = sys + ".ctrl";
        add_node(ctrl, "SystemController", "MachineHall");
        std::string ctrl_port = "ge" + std::to_string(port++);
        link(leaf, ctrl_port, ctrl, "eth0", k1G);
        access(leaf, ctrl_port, 3);
        json fpgas = json::array();
        for (int f = 0; f < 2; ++f) {
          std::string fpga = sys + ".fpga" + std::to_string(f);
          add_node(fpga, "FpgaEndpoint", "MachineHall");
          std::string fpga_port = "ge" + std::to_string(port++);
          link(leaf, fpga_port, fpga, "eth0", k1G);
          access(leaf, fpga_port, 4);
          fpgas.push_back(fpga);
        }
        drawer["systems"].push_back({{"id", sys},
                                     {"controller", ctrl},
                                     {"fpgas", fpgas},
                                     {"analog_feed", sys + ".ac6"},
                                     {"productive", system_no <= kProductiveSystems}});
      }
      rack["drawers"].push_back(drawer);
    }
    racks.push_back(rack);
  }

  return {{"name", "default_fleet"}, {"nodes", nodes}, {"links", links}, {"port_modes", modes}, {"racks", racks}};
}

}  // namespace fleetops::topology
