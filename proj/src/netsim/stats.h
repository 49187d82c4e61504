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
#include <string>
#include <vector>

#include "common/line_format.h"
#include "common/time.h"
#include "topology/topology.h"

namespace fleetops::netsim {

enum class DropCause { kQueueFull, kFirewall, kLinkDown, kPoweredOff, kNoRoute };
inline constexpr int kDropCauseCount = 5;

struct FlowStats {
  std::string name;
  topology::Vlan vlan = topology::Vlan::kExperimentData;
  std::uint32_t frame_bytes = 0;
  std::uint64_t offered_bytes = 0;
  std::uint64_t offered_frames = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t delivered_frames = 0;
  std::array<std::uint64_t, kDropCauseCount> dropped_frames{};
  double latency_sum_s = 0;
  /// Parallel per-frame records, in delivery order.
  std::vector<Nanos> delivery_times;
  std::vector<std::uint32_t> latencies_ns;

  std::uint64_t total_dropped() const;
};

struct PortStats {
  Nanos busy = 0;
  std::array<std::uint64_t, topology::kVlanCount> tx_bytes{};
  std::array<std::uint64_t, topology::kVlanCount> tx_frames{};
  std::array<std::uint64_t, topology::kVlanCount> drops{};
};

struct SimStats {
  Nanos elapsed = 0;
  std::vector<FlowStats> flows;
  /// Indexed by DirectedLink.
  std::vector<PortStats> ports;
  std::uint64_t offered_bytes = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t dropped_bytes = 0;
  std::uint64_t probes_sent = 0;
  std::uint64_t probes_answered = 0;

  double Utilization(topology::DirectedLink d) const;
  /// Average rate at which `vlan` left the port over [0, elapsed].
  double VlanRate(topology::DirectedLink d, topology::Vlan vlan) const;
};

struct ThroughputReport {
  double throughput_bps = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t delivered_frames = 0;
  double latency_mean_s = 0;
  double latency_p50_s = 0;
  double latency_p99_s = 0;
  double latency_max_s = 0;
};

/// Flow and port counters in the metrics line format.
std::vector<MetricLine> ExportStats(const SimStats &stats, const topology::Topology &topo);

}  // namespace fleetops::netsim
