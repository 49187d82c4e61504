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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "allocman/allocman.h"
#include "cicd/pipeline.h"
#include "common/time.h"
#include "monitor/store.h"
#include "netsim/network.h"
#include "topology/topology.h"

namespace fleetops::faults {

using topology::Topology;

enum class FaultKind { kDosFlood, kDrawerPowerFail, kSystemAnalogPowerFail, kLinkDown, kControllerHang, kSiteOutage };

std::string_view FaultKindName(FaultKind k);
std::optional<FaultKind> FaultKindFromName(std::string_view name);

struct FaultEvent {
  std::size_t id = 0;
  Nanos at = 0;
  std::optional<Nanos> duration;  // permanent when absent
  FaultKind kind = FaultKind::kSiteOutage;
  /// Device, drawer, system or link id, depending on kind.
  std::string target;
  // DosFlood only.
  std::string flood_dst;
  bool backlogged = true;
  double rate_bps = 0;
  topology::Vlan vlan = topology::Vlan::kExperimentData;
  std::uint32_t frame_bytes = 1500;
};

/// Components (fabric node ids and "<system>.asic_analog" domains) that lose
/// power under a power-kind fault; empty for other kinds.
std::vector<std::string> PowerPropagate(const Topology &topo, const FaultEvent &e);

struct FlowDecl {
  std::string name;
  std::string src;
  std::string dst;
  topology::Vlan vlan = topology::Vlan::kExperimentData;
  netsim::FlowMode mode = netsim::FlowMode::kConstantRate;
  double rate_bps = 0;
  std::uint32_t frame_bytes = 1500;
  Nanos start = 0;
  std::optional<Nanos> stop;
};

struct AllocDecl {
  Nanos at = 0;
  allocman::AllocationRequest request;
  /// Released this long after activation; otherwise walltime governs.
  std::optional<Nanos> hold;
  /// Starts node<->fpga0 traffic for the allocation's lifetime.
  bool traffic = false;
};

/// Generator for randomized allocation workloads with edge-probing traffic.
struct RandomAllocations {
  int count = 0;
  Nanos span = 0;
  Nanos hold_min = 10 * kSecond;
  Nanos hold_max = 60 * kSecond;
  double rate_bps = 200e3;
  std::uint32_t frame_bytes = 500;
  /// Traffic starts at submission and stops this long after release.
  Nanos tail = 2 * kSecond;
  int users = 8;
};

enum class CicdEventKind { kSubmit, kApprove, kCorruptStaging };

struct CicdEvent {
  Nanos at = 0;
  CicdEventKind kind = CicdEventKind::kSubmit;
  cicd::Changeset changeset;
  std::map<cicd::Job, cicd::Outcome> outcomes;
  std::string pipeline;
  std::string approver;
};

struct CommandDecl {
  Nanos at = 0;
  nlohmann::json command;  // {"verb": ..., ...} as accepted by the control plane
};

struct CheckDecl {
  std::string name;
  std::string type;
  nlohmann::json params;
};

struct MonitorConfig {
  bool telemetry = true;
  Nanos telemetry_period = kSecond;
  std::optional<Nanos> telemetry_until;  // stop sampling here
  bool probes = true;
  Nanos probe_period = kMinute;
  topology::Vlan probe_vlan = topology::Vlan::kExperimentData;
  bool health_checks = true;
  Nanos health_period = 2 * kHour;
  bool fidelity = true;
  Nanos fidelity_period = kDay;
  Nanos fidelity_runtime = 30 * kMinute;
  std::string fidelity_node = "node25";
  Nanos retention_period = kHour;
  std::vector<monitor::RetentionTier> tiers = monitor::DefaultTiers();
};

struct CicdConfig {
  cicd::PoolConfig pools;
  std::array<Nanos, cicd::kJobCount> durations = {30 * kMinute, 2 * kHour, 20 * kMinute, 15 * kMinute, 30 * kMinute};
  Nanos configure_delay = 10 * kSecond;
  Nanos hw_walltime = 2 * kHour;
  std::string hw_user = "ci";
  std::string hw_node = "node26";
};

struct Scenario {
  std::string name;
  nlohmann::json topology_doc;
  std::shared_ptr<const Topology> topology;  // after config overrides
  std::uint64_t seed = 1;
  Nanos duration = 0;
  netsim::NetConfig net;
  MonitorConfig monitor;
  CicdConfig cicd;
  std::vector<std::string> firewall_exempt = {"monitor"};
  std::vector<FlowDecl> flows;
  std::vector<AllocDecl> allocations;
  std::optional<RandomAllocations> random_allocations;
  std::vector<FaultEvent> faults;
  std::vector<CicdEvent> cicd_events;
  std::vector<CommandDecl> commands;
  std::vector<CheckDecl> checks;
};

/// Parses and validates a scenario; every reference is resolved against
/// the topology and every timestamp must lie in [0, duration]. Relative
/// topology paths resolve against `base_dir`, then the shipped data dir.
Scenario LoadScenario(const nlohmann::json &doc, const std::string &base_dir = ".");
Scenario LoadScenarioFile(const std::string &path);
/// Shipped scenario by name, or a path.
std::string ResolveScenarioPath(const std::string &name_or_path);
std::string DataDir();

}  // namespace fleetops::faults
