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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "allocman/allocman.h"
#include "cicd/pipeline.h"
#include "sim/simulation.h"

namespace fleetops::sim {

/// Everything the offline invariant checks need, either taken from a live
/// simulation or read back from a trace directory.
struct TraceData {
  std::string scenario;
  std::uint64_t seed = 0;
  Nanos end = 0;
  std::set<std::string> exempt;
  std::map<std::string, std::string> endpoint_systems;  // FPGA node -> system
  std::string stable_checksum;
  std::string hw_user = "ci";
  int eda_parallelism = 4;
  int hw_parallelism = 2;
  std::vector<std::pair<std::uint64_t, allocman::AllocLogRecord>> alloc;  // (seq, record)
  std::vector<cicd::PipelineLogRecord> pipeline;
  std::vector<FrameRun> frames;
  std::vector<HealthRecord> health;
};

TraceData TraceFromSimulation(const Simulation &sim);
TraceData LoadTrace(const std::string &dir);

struct ReplayResult {
  std::string name;
  bool ok = true;
  std::uint64_t checked = 0;
  std::uint64_t violation_count = 0;
  std::vector<std::string> violations;  // first few only

  void Violation(std::string what);
  nlohmann::json ToJson() const;
};

/// Every delivered experiment frame crossed the firewall while an allocation
/// joined its node and system.
ReplayResult CheckFirewallSoundness(const TraceData &t);
/// No experiment frame between an allocated pair was dropped by the firewall
/// more than `margin` inside the allocation window.
ReplayResult CheckFirewallCompleteness(const TraceData &t, Nanos margin);
/// No health report ran on a system that was allocated or drained.
ReplayResult CheckOccupancySafety(const TraceData &t);
/// Hardware tests only ran staged images, after their bitfile build passed.
ReplayResult CheckCiOrdering(const TraceData &t);
/// Jobs ran in their own pool and never beyond its parallelism.
ReplayResult CheckPoolIsolation(const TraceData &t);
/// Finished pipelines voted exactly once, with a vote that matches their jobs.
ReplayResult CheckVoteTotality(const TraceData &t);
/// Releases only followed a positive vote and an approval.
ReplayResult CheckReleaseGate(const TraceData &t);
/// Every CI allocation ended in release, expiry or cancellation.
ReplayResult CheckAllocHygiene(const TraceData &t);

std::vector<ReplayResult> ReplayAll(const TraceData &t, Nanos margin = kMillisecond);

}  // namespace fleetops::sim
