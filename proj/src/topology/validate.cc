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

#include "topology/validate.h"

#include <map>
#include <set>

#include "common/error.h"
#include "topology/routing.h"

namespace fleetops::topology {

namespace {

constexpr double k1G = 1e9;
constexpr double k10G = 1e10;
constexpr double k100G = 1e11;

bool IsDevice(NodeKind k) {
  return k == NodeKind::kSystemController || k == NodeKind::kFpgaEndpoint || k == NodeKind::kPdu;
}

class Checker {
 public:
  explicit Checker(const Topology &t) : t_(t) {}

  std::vector<Violation> Run() {
    if (t_.nodes().empty() || t_.systems().empty()) {
      Add(ViolationKind::kEmptyTopology, t_.name(), "topology defines no systems");
    }
    CheckCore();
    for (LinkIndex l = 0; l < t_.links().size(); ++l) CheckLink(l);
    CheckComposition();
    CheckProvisioning();
    return std::move(out_);
  }

 private:
  void Add(ViolationKind k, std::string subject, std::string message) {
    out_.push_back({k, std::move(subject), std::move(message)});
  }

  void CheckCore() {
    int cores = 0;
    for (const auto &n : t_.nodes()) cores += n.kind == NodeKind::kCoreSwitch;
    if (!t_.nodes().empty() && cores != 1) {
      Add(ViolationKind::kCoreSwitchCount, t_.name(), "expected exactly one core switch, found " + std::to_string(cores));
    }
  }

  void CheckLink(LinkIndex l) {
    const Link &link = t_.link(l);
    if (!(link.capacity_bps > 0)) {
      Add(ViolationKind::kInvalidCapacity, link.id, "capacity must be positive");
      return;
    }
    NodeKind ka = t_.node(link.a.node).kind;
    NodeKind kb = t_.node(link.b.node).kind;
    auto is = [&](NodeKind x, NodeKind y) { return (ka == x && kb == y) || (ka == y && kb == x); };
    auto tier = [&](std::initializer_list<double> allowed, const char *what) {
      for (double c : allowed)
        if (link.capacity_bps == c) return;
      Add(ViolationKind::kTieringViolation, link.id, std::string(what) + " link has unexpected capacity");
    };
    if (is(NodeKind::kCoreSwitch, NodeKind::kSpineSwitch)) tier({k100G, k10G}, "core-spine");
    if (is(NodeKind::kSpineSwitch, NodeKind::kLeafSwitch)) tier({k10G}, "spine-leaf");
    if (is(NodeKind::kCoreSwitch, NodeKind::kClusterNode)) tier({k100G}, "core-cluster node");

    // Port modes: switch-to-switch ports are tagged trunks, device-facing
    // leaf ports untagged access ports carrying a single VLAN.
    bool a_switch = IsSwitch(ka), b_switch = IsSwitch(kb);
    for (int side = 0; side < 2; ++side) {
      const LinkEnd &end = side ? link.b : link.a;
      NodeKind self = side ? kb : ka;
      NodeKind peer = side ? ka : kb;
      std::string subject = t_.node(end.node).id + "/" + end.port;
      if (!IsSwitch(self)) continue;
      if (!end.mode) {
        Add(ViolationKind::kPortModeViolation, subject, "switch port has no configured mode");
        continue;
      }
      if (end.mode->kind == PortMode::Kind::kAccessUntagged && end.mode->vlans.Size() != 1) {
        Add(ViolationKind::kPortModeViolation, subject, "access port must carry exactly one VLAN");
      }
      if (a_switch && b_switch && end.mode->kind != PortMode::Kind::kTrunkTagged) {
        Add(ViolationKind::kPortModeViolation, subject, "inter-switch port must be a tagged trunk");
      }
      if (self == NodeKind::kLeafSwitch && IsDevice(peer)) {
        tier({k1G}, "leaf-device");
        if (end.mode->kind != PortMode::Kind::kAccessUntagged) {
          Add(ViolationKind::kPortModeViolation, subject, "device-facing leaf port must be untagged access");
        } else {
          std::optional<Vlan> want;
          if (peer == NodeKind::kSystemController) want = Vlan::kSystemMgmt;
          if (peer == NodeKind::kFpgaEndpoint) want = Vlan::kExperimentData;
          if (peer == NodeKind::kPdu) want = Vlan::kInfraMgmt;
          if (want && !(end.mode->vlans == VlanSet{*want})) {
            Add(ViolationKind::kPortModeViolation, subject,
                "device port must be on VLAN " + std::to_string(VlanNumber(*want)));
          }
        }
      }
    }
  }

  void CheckComposition() {
    std::map<NodeIndex, int> owner_count;
    std::set<std::string> analog_feeds;
    for (const auto &sys : t_.systems()) {
      if (!sys.controller) {
        Add(ViolationKind::kCompositionViolation, sys.id, "system has no controller");
      } else {
        ++owner_count[*sys.controller];
        if (t_.node(*sys.controller).kind != NodeKind::kSystemController)
          Add(ViolationKind::kCompositionViolation, sys.id, "controller node is not a SystemController");
      }
      if (sys.fpgas.size() != 2) {
        Add(ViolationKind::kCompositionViolation, sys.id,
            "system must have exactly 2 FPGA endpoints, has " + std::to_string(sys.fpgas.size()));
      }
      for (NodeIndex f : sys.fpgas) {
        ++owner_count[f];
        if (t_.node(f).kind != NodeKind::kFpgaEndpoint)
          Add(ViolationKind::kCompositionViolation, sys.id, t_.node(f).id + " is not an FpgaEndpoint");
      }
      if (sys.analog_feed.empty()) {
        Add(ViolationKind::kPowerCompositionViolation, sys.id, "system has no 6 V analog feed");
      } else if (!analog_feeds.insert(sys.analog_feed).second) {
        Add(ViolationKind::kPowerCompositionViolation, sys.id, "analog feed '" + sys.analog_feed + "' is shared");
      }
      // Devices must hang off their own drawer's leaf.
      const Drawer &drawer = t_.drawers()[sys.drawer];
      if (drawer.leaf) {
        std::vector<NodeIndex> devices = sys.fpgas;
        if (sys.controller) devices.push_back(*sys.controller);
        for (NodeIndex dev : devices) {
          bool attached = false;
          for (const auto &adj : t_.adjacent(dev)) attached |= adj.peer == *drawer.leaf;
          if (!attached)
            Add(ViolationKind::kCompositionViolation, t_.node(dev).id, "not attached to drawer leaf " + t_.node(*drawer.leaf).id);
        }
      }
    }
    for (NodeIndex n = 0; n < t_.nodes().size(); ++n) {
      NodeKind k = t_.node(n).kind;
      if (k != NodeKind::kSystemController && k != NodeKind::kFpgaEndpoint) continue;
      int owners = owner_count.count(n) ? owner_count[n] : 0;
      if (owners != 1) {
        Add(ViolationKind::kCompositionViolation, t_.node(n).id,
            "belongs to " + std::to_string(owners) + " systems, expected exactly one");
      }
    }
    for (const auto &drawer : t_.drawers()) {
      if (drawer.dc12_feeds.size() != 1) {
        Add(ViolationKind::kPowerCompositionViolation, drawer.id,
            "drawer must have exactly one 12 V feed, has " + std::to_string(drawer.dc12_feeds.size()));
      }
      if (!drawer.leaf || t_.node(*drawer.leaf).kind != NodeKind::kLeafSwitch) {
        Add(ViolationKind::kCompositionViolation, drawer.id, "drawer must have exactly one leaf switch");
      }
      if (drawer.systems.size() > 2) {
        Add(ViolationKind::kCompositionViolation, drawer.id, "drawer holds more than 2 systems");
      }
    }
  }

  bool Reachable(NodeIndex a, NodeIndex b, Vlan v) {
    try {
      ResolvePath(t_, a, b, v);
      return true;
    } catch (const Error &) {
      return false;
    }
  }

  void CheckProvisioning() {
    std::vector<NodeIndex> cluster, monitors;
    for (NodeIndex n = 0; n < t_.nodes().size(); ++n) {
      NodeKind k = t_.node(n).kind;
      if (k == NodeKind::kClusterNode || k == NodeKind::kRemoteClusterNode) cluster.push_back(n);
      if (k == NodeKind::kCentralMonitorHost) monitors.push_back(n);
    }
    for (const auto &sys : t_.systems()) {
      for (NodeIndex m : monitors) {
        if (sys.controller && !Reachable(m, *sys.controller, Vlan::kSystemMgmt)) {
          Add(ViolationKind::kVlanProvisioningViolation, t_.node(*sys.controller).id,
              "not reachable from " + t_.node(m).id + " on VLAN 3");
        }
        for (NodeIndex f : sys.fpgas) {
          if (!Reachable(m, f, Vlan::kExperimentData))
            Add(ViolationKind::kVlanProvisioningViolation, t_.node(f).id, "not reachable from " + t_.node(m).id + " on VLAN 4");
        }
      }
      for (NodeIndex c : cluster) {
        for (NodeIndex f : sys.fpgas) {
          if (!Reachable(c, f, Vlan::kExperimentData))
            Add(ViolationKind::kVlanProvisioningViolation, t_.node(f).id, "not reachable from " + t_.node(c).id + " on VLAN 4");
        }
      }
    }
    for (NodeIndex n = 0; n < t_.nodes().size(); ++n) {
      if (t_.node(n).kind != NodeKind::kPdu) continue;
      for (NodeIndex m : monitors) {
        if (!Reachable(m, n, Vlan::kInfraMgmt))
          Add(ViolationKind::kVlanProvisioningViolation, t_.node(n).id, "not reachable from " + t_.node(m).id + " on VLAN 1");
      }
    }
  }

  const Topology &t_;
  std::vector<Violation> out_;
};

}  // namespace

std::string_view ViolationKindName(ViolationKind k) {
  switch (k) {
    case ViolationKind::kEmptyTopology: return "EmptyTopology";
    case ViolationKind::kCoreSwitchCount: return "CoreSwitchCount";
    case ViolationKind::kInvalidCapacity: return "InvalidCapacity";
    case ViolationKind::kTieringViolation: return "TieringViolation";
    case ViolationKind::kPortModeViolation: return "PortModeViolation";
    case ViolationKind::kPowerCompositionViolation: return "PowerCompositionViolation";
    case ViolationKind::kCompositionViolation: return "CompositionViolation";
    case ViolationKind::kVlanProvisioningViolation: return "VlanProvisioningViolation";
  }
  return "?";
}

std::vector<Violation> ValidateTopology(const Topology &t) { return Checker(t).Run(); }

}  // namespace fleetops::topology
