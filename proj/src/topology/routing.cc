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

#include "topology/routing.h"

#include <deque>
#include <limits>

#include "common/error.h"

namespace fleetops::topology {

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

bool Forwards(const Topology &t, NodeIndex n) { return IsSwitch(t.node(n).kind); }

}  // namespace

Path ResolvePath(const Topology &t, NodeIndex src, NodeIndex dst, Vlan vlan, const LinkFilter &usable) {
  if (src == dst) return {};
  auto admits = [&](LinkIndex l) { return t.LinkCarries(l, vlan) && (!usable || usable(l)); };

  // Hop distance to dst, expanding backwards only through forwarding nodes.
  std::vector<int> dist(t.nodes().size(), kUnreached);
  std::deque<NodeIndex> frontier{dst};
  dist[dst] = 0;
  while (!frontier.empty()) {
    NodeIndex n = frontier.front();
    frontier.pop_front();
    if (n != dst && !Forwards(t, n)) continue;
    for (const auto &adj : t.adjacent(n)) {
      if (dist[adj.peer] != kUnreached || !admits(adj.link)) continue;
      dist[adj.peer] = dist[n] + 1;
      frontier.push_back(adj.peer);
    }
  }
  if (dist[src] == kUnreached) {
    throw Error(ErrorCode::kNoPath, t.node(src).id + " -> " + t.node(dst).id + " on VLAN " +
                                        std::to_string(VlanNumber(vlan)));
  }

  // Greedy descent; adjacency lists are sorted by peer id, so the first
  // admissible neighbour one hop closer gives the lexicographic tie-break.
  Path path;
  NodeIndex at = src;
  while (at != dst) {
    bool advanced = false;
    for (const auto &adj : t.adjacent(at)) {
      if (dist[adj.peer] != dist[at] - 1 || !admits(adj.link)) continue;
      if (adj.peer != dst && !Forwards(t, adj.peer)) continue;
      path.push_back(adj.outgoing);
      at = adj.peer;
      advanced = true;
      break;
    }
    if (!advanced) throw Error(ErrorCode::kNoPath, "routing descent failed at " + t.node(at).id);
  }
  return path;
}

DemandMap AggregateDemand(const Topology &t, const std::vector<OfferedLoad> &load) {
  DemandMap out;
  out.demand_bps.assign(t.links().size() * 2, 0.0);
  for (const auto &entry : load) {
    for (DirectedLink d : ResolvePath(t, entry.src, entry.dst, entry.vlan)) out.demand_bps[d] += entry.rate_bps;
  }
  for (DirectedLink d = 0; d < out.demand_bps.size(); ++d) {
    if (out.demand_bps[d] > t.link(LinkOf(d)).capacity_bps) out.oversubscribed.push_back(d);
  }
  return out;
}

}  // namespace fleetops::topology
