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

#include <functional>
#include <string>
#include <vector>

#include "topology/topology.h"

namespace fleetops::topology {

using Path = std::vector<DirectedLink>;

/// Optional filter for links currently out of service.
using LinkFilter = std::function<bool(LinkIndex)>;

/// Shortest path by hop count from `src` to `dst` on which every link admits
/// `vlan`. Only switches forward; among equal-length paths the one whose node
/// id sequence is lexicographically smallest wins. Throws kNoPath.
Path ResolvePath(const Topology &t, NodeIndex src, NodeIndex dst, Vlan vlan, const LinkFilter &usable = {});

struct OfferedLoad {
  NodeIndex src;
  NodeIndex dst;
  Vlan vlan;
  double rate_bps;
};

struct DemandMap {
  /// Indexed by DirectedLink.
  std::vector<double> demand_bps;
  std::vector<DirectedLink> oversubscribed;

  double Demand(DirectedLink d) const { return demand_bps.at(d); }
};

/// Static per-direction demand of a set of flows routed with ResolvePath.
DemandMap AggregateDemand(const Topology &t, const std::vector<OfferedLoad> &load);

}  // namespace fleetops::topology
