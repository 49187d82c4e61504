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

#include "netsim/stats.h"

namespace fleetops::netsim {

std::uint64_t FlowStats::total_dropped() const {
  std::uint64_t n = 0;
  for (auto d : dropped_frames) n += d;
  return n;
}

double SimStats::Utilization(topology::DirectedLink d) const {
  if (elapsed <= 0) return 0;
  return static_cast<double>(ports.at(d).busy) / static_cast<double>(elapsed);
}

double SimStats::VlanRate(topology::DirectedLink d, topology::Vlan vlan) const {
  if (elapsed <= 0) return 0;
  return static_cast<double>(ports.at(d).tx_bytes[topology::VlanIndex(vlan)]) * 8.0 / ToSeconds(elapsed);
}

std::vector<MetricLine> ExportStats(const SimStats &stats, const topology::Topology &topo) {
  static constexpr const char *kDropNames[] = {"queue_full", "firewall", "link_down", "powered_off", "no_route"};
  std::vector<MetricLine> out;
  for (const auto &f : stats.flows) {
    Tags tags = {{"flow", f.name}, {"vlan", std::to_string(topology::VlanNumber(f.vlan))}};
    out.push_back({"netsim.flow.offered_bytes", tags, static_cast<double>(f.offered_bytes), stats.elapsed});
    out.push_back({"netsim.flow.delivered_bytes", tags, static_cast<double>(f.delivered_bytes), stats.elapsed});
    double mean = f.delivered_frames ? f.latency_sum_s / static_cast<double>(f.delivered_frames) : 0.0;
    out.push_back({"netsim.flow.latency_mean_s", tags, mean, stats.elapsed});
    for (int c = 0; c < kDropCauseCount; ++c) {
      if (!f.dropped_frames[c]) continue;
      Tags dt = tags;
      dt.emplace_back("cause", kDropNames[c]);
      out.push_back({"netsim.flow.dropped_frames", dt, static_cast<double>(f.dropped_frames[c]), stats.elapsed});
    }
  }
  for (topology::DirectedLink d = 0; d < stats.ports.size(); ++d) {
    const PortStats &p = stats.ports[d];
    if (p.busy == 0) continue;
    Tags tags = {{"link", topo.DirectedName(d)}};
    out.push_back({"netsim.link.utilization", tags, stats.Utilization(d), stats.elapsed});
    for (topology::Vlan v : topology::kAllVlans) {
      int i = topology::VlanIndex(v);
      if (!p.tx_bytes[i] && !p.drops[i]) continue;
      Tags vt = tags;
      vt.emplace_back("vlan", std::to_string(topology::VlanNumber(v)));
      out.push_back({"netsim.port.tx_bytes", vt, static_cast<double>(p.tx_bytes[i]), stats.elapsed});
      if (p.drops[i]) out.push_back({"netsim.port.drops", vt, static_cast<double>(p.drops[i]), stats.elapsed});
    }
  }
  return out;
}

}  // namespace fleetops::netsim
