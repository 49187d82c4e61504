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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "common/time.h"

namespace fleetops::topology {

/// The four 802.1Q networks sharing the physical fabric. The numeric value is
/// the VLAN id.
enum class Vlan : std::uint8_t {
  kInfraMgmt = 1,
  kClusterIpmi = 2,
  kSystemMgmt = 3,
  kExperimentData = 4,
};

inline constexpr int kVlanCount = 4;
inline constexpr std::array<Vlan, kVlanCount> kAllVlans = {Vlan::kInfraMgmt, Vlan::kClusterIpmi,
                                                          Vlan::kSystemMgmt, Vlan::kExperimentData};

inline constexpr int VlanIndex(Vlan v) { return static_cast<int>(v) - 1; }
inline constexpr int VlanNumber(Vlan v) { return static_cast<int>(v); }
std::optional<Vlan> VlanFromNumber(int id);
std::string_view VlanRoleName(Vlan v);

/// Compact set of VLANs carried by a port.
class VlanSet {
 public:
  constexpr VlanSet() = default;
  constexpr VlanSet(std::initializer_list<Vlan> vlans) {
    for (Vlan v : vlans) Insert(v);
  }
  constexpr void Insert(Vlan v) { bits_ |= static_cast<std::uint8_t>(1u << VlanIndex(v)); }
  constexpr bool Contains(Vlan v) const { return bits_ & (1u << VlanIndex(v)); }
  constexpr int Size() const { return __builtin_popcount(bits_); }
  constexpr bool Empty() const { return bits_ == 0; }
  std::vector<Vlan> ToVector() const;
  constexpr bool operator==(const VlanSet &) const = default;

 private:
  std::uint8_t bits_ = 0;
};

enum class NodeKind {
  kCoreSwitch,
  kSpineSwitch,
  kLeafSwitch,
  kClusterNode,
  kRemoteClusterNode,
  kSystemController,
  kFpgaEndpoint,
  kPdu,
  kCentralMonitorHost,
};

enum class Location { kServerRoom, kMachineHall, kLaboratory };

std::string_view NodeKindName(NodeKind k);
std::string_view LocationName(Location l);
bool IsSwitch(NodeKind k);

using NodeIndex = std::uint32_t;
using LinkIndex = std::uint32_t;
/// A link in one direction: 2 * link + (0 for a->b, 1 for b->a).
using DirectedLink = std::uint32_t;

inline constexpr LinkIndex LinkOf(DirectedLink d) { return d >> 1; }
inline constexpr DirectedLink Directed(LinkIndex l, bool reverse) { return (l << 1) | (reverse ? 1u : 0u); }

struct NetNode {
  std::string id;
  NodeKind kind;
  Location location;
};

struct PortMode {
  enum class Kind { kTrunkTagged, kAccessUntagged };
  Kind kind = Kind::kAccessUntagged;
  VlanSet vlans;

  static PortMode Trunk(VlanSet v) { return {Kind::kTrunkTagged, v}; }
  static PortMode Access(Vlan v) { return {Kind::kAccessUntagged, VlanSet{v}}; }
  bool Carries(Vlan v) const { return vlans.Contains(v); }
};

struct LinkEnd {
  NodeIndex node;
  std::string port;
  /// Absent when the document gives no mode for this port. Host-side ports
  /// without a mode mirror the switch side.
  std::optional<PortMode> mode;
};

struct Link {
  std::string id;
  LinkEnd a;
  LinkEnd b;
  double capacity_bps;
  Nanos propagation;

  /// The mode governing traffic on this end, after host-side mirroring.
  const PortMode *EffectiveMode(bool b_side) const;
};

struct System {
  std::string id;
  std::optional<NodeIndex> controller;
  std::vector<NodeIndex> fpgas;
  std::string analog_feed;
  bool productive = true;
  std::size_t drawer = 0;
};

struct Drawer {
  std::string id;
  std::optional<NodeIndex> leaf;
  std::vector<std::string> dc12_feeds;
  std::vector<std::size_t> systems;
  std::size_t rack = 0;
};

struct Rack {
  std::string id;
  Location location;
  std::vector<std::size_t> drawers;
};

/// Immutable description of the fabric and the rack/drawer/system
/// composition. Built once by Load() and shared read-only afterwards.
class Topology {
 public:
  static Topology Load(const nlohmann::json &doc);
  static Topology LoadFile(const std::string &path);

  const std::string &name() const { return name_; }
  const std::vector<NetNode> &nodes() const { return nodes_; }
  const std::vector<Link> &links() const { return links_; }
  const std::vector<Rack> &racks() const { return racks_; }
  const std::vector<Drawer> &drawers() const { return drawers_; }
  const std::vector<System> &systems() const { return systems_; }

  const NetNode &node(NodeIndex i) const { return nodes_[i]; }
  const Link &link(LinkIndex i) const { return links_[i]; }
  std::optional<NodeIndex> FindNode(std::string_view id) const;
  NodeIndex NodeByName(std::string_view id) const;  // throws kUnknownEntity
  std::optional<LinkIndex> FindLink(std::string_view id) const;
  std::optional<std::size_t> FindSystem(std::string_view id) const;
  std::optional<std::size_t> FindDrawer(std::string_view id) const;

  /// System that owns an FPGA endpoint or controller node.
  std::optional<std::size_t> SystemOfNode(NodeIndex n) const;

  struct Adjacency {
    LinkIndex link;
    NodeIndex peer;
    DirectedLink outgoing;
  };
  /// Neighbours sorted by peer id.
  const std::vector<Adjacency> &adjacent(NodeIndex n) const { return adjacency_[n]; }

  NodeIndex Source(DirectedLink d) const { return (d & 1) ? links_[LinkOf(d)].b.node : links_[LinkOf(d)].a.node; }
  NodeIndex Target(DirectedLink d) const { return (d & 1) ? links_[LinkOf(d)].a.node : links_[LinkOf(d)].b.node; }
  std::string DirectedName(DirectedLink d) const;

  /// True iff both ends of the link admit frames tagged `v`.
  bool LinkCarries(LinkIndex l, Vlan v) const;

  /// A copy with a changed link capacity; used for scenario overrides.
  Topology WithLinkCapacity(LinkIndex l, double capacity_bps) const;

  nlohmann::json ToJson() const;

 private:
  void BuildIndices();

  std::string name_;
  std::vector<NetNode> nodes_;
  std::vector<Link> links_;
  std::vector<Rack> racks_;
  std::vector<Drawer> drawers_;
  std::vector<System> systems_;
  std::vector<std::vector<Adjacency>> adjacency_;
  std::unordered_map<std::string, NodeIndex> node_index_;
  std::unordered_map<std::string, LinkIndex> link_index_;
  std::unordered_map<std::string, std::size_t> system_index_;
  std::unordered_map<std::string, std::size_t> drawer_index_;
  std::vector<std::optional<std::size_t>> node_system_;
};

/// The shipped reference fleet: one core switch, a machine-hall spine with
/// eight drawer leaves (2 racks x 4 drawers x 2 systems), a laboratory spine
/// with remote cluster nodes, 26 cluster nodes and a central monitor host.
nlohmann::json DefaultFleetDocument();

}  // namespace fleetops::topology
