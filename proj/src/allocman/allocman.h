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
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "common/time.h"
#include "netsim/network.h"
#include "topology/topology.h"

namespace fleetops::allocman {

using topology::NodeIndex;
using topology::Topology;
using AllocId = std::uint64_t;
using SystemIndex = std::size_t;

inline constexpr const char *kAnyProductive = "any";

struct AllocationRequest {
  std::string user;
  /// Cluster node that launched the allocation; the firewall opens VLAN 4
  /// between this node and the granted system.
  std::string node;
  /// A system id, or kAnyProductive.
  std::string selector = kAnyProductive;
  Nanos walltime = kHour;
};

enum class AllocState { kQueued, kActive, kCompleted, kCancelled };
enum class SystemState { kFree, kAllocated, kDrained };

std::string_view AllocStateName(AllocState s);
std::string_view SystemStateName(SystemState s);

struct Allocation {
  AllocId id = 0;
  std::string user;
  std::string node;
  std::string selector;
  std::optional<SystemIndex> system;
  AllocState state = AllocState::kQueued;
  Nanos walltime = 0;
  Nanos t_submit = 0;
  Nanos t_start = -1;
  Nanos t_end = -1;
};

struct FirewallRuleSet {
  std::uint64_t generation = 0;
  /// (cluster node id, system id) pairs allowed on VLAN 4.
  std::set<std::pair<std::string, std::string>> allow;
};

/// Builds the rule set for the given allocations; only Active ones open a
/// pair. `generation` is the new rule set's generation.
FirewallRuleSet DeriveFirewall(const Topology &topo, const std::vector<Allocation> &allocations,
                               std::uint64_t generation);

/// One append-only allocation log record.
struct AllocLogRecord {
  Nanos t = 0;
  std::string op;  // submit, queue, activate, release, expire, cancel, drain, drain_pending, undrain
  std::string user;
  std::string node;
  std::string system;
  AllocId alloc_id = 0;
  std::uint64_t generation = 0;
};

nlohmann::json ToJson(const AllocLogRecord &r);
AllocLogRecord AllocLogRecordFromJson(const nlohmann::json &j);

/// FCFS allocation manager with first-fit by lowest system index. Owns the
/// per-system operational state and the VLAN 4 rule set derived from the
/// active allocations.
class AllocManager {
 public:
  using Listener = std::function<void(const AllocLogRecord &, const Allocation &)>;

  /// `exempt` names infrastructure hosts (the central monitor) that may
  /// always reach system endpoints on VLAN 4.
  explicit AllocManager(std::shared_ptr<const Topology> topo, std::vector<std::string> exempt = {});

  Allocation Submit(const AllocationRequest &req, Nanos now);
  Allocation Release(AllocId id, Nanos now);
  /// Release triggered by walltime; a no-op returning nullopt when the
  /// allocation already ended.
  std::optional<Allocation> Expire(AllocId id, Nanos now);
  /// Withdraws a Queued request.
  Allocation Cancel(AllocId id, Nanos now);
  SystemState Drain(const std::string &system, Nanos now);
  SystemState Undrain(const std::string &system, Nanos now);

  /// VLAN 4 gate, evaluated per frame against the current rule set.
  bool Permit(const netsim::FrameHeader &frame) const;

  const FirewallRuleSet &rules() const { return rules_; }
  SystemState state(SystemIndex s) const { return states_[s]; }
  bool drain_pending(SystemIndex s) const { return drain_pending_[s]; }
  std::optional<AllocId> active_on(SystemIndex s) const { return active_on_[s]; }
  const Allocation &allocation(AllocId id) const;
  const std::map<AllocId, Allocation> &allocations() const { return allocs_; }
  const std::deque<AllocId> &queue() const { return queue_; }
  const std::vector<AllocLogRecord> &log() const { return log_; }
  std::size_t active_count() const;
  AllocId next_id() const { return next_id_; }

  void SetListener(Listener l) { listener_ = std::move(l); }

 private:
  SystemIndex ResolveSystem(const std::string &id) const;
  std::optional<SystemIndex> FirstFit(const Allocation &a) const;
  void Activate(Allocation &a, SystemIndex s, Nanos now);
  Allocation &Finish(AllocId id, Nanos now, const char *op);
  /// Promotes queued requests in FIFO order onto free systems.
  std::vector<AllocId> PromoteQueued(Nanos now);
  void Rederive();
  void Record(Nanos now, const char *op, const Allocation *a, const std::string &system);

  std::shared_ptr<const Topology> topo_;
  std::vector<SystemState> states_;
  std::vector<bool> drain_pending_;
  std::vector<std::optional<AllocId>> active_on_;
  std::map<AllocId, Allocation> allocs_;
  std::deque<AllocId> queue_;
  AllocId next_id_ = 1;
  FirewallRuleSet rules_;
  /// Dense view of rules_: allowed_[node * systems + system].
  std::vector<std::uint8_t> allowed_;
  std::vector<bool> exempt_;
  std::vector<std::optional<SystemIndex>> endpoint_system_;
  std::vector<AllocLogRecord> log_;
  Listener listener_;
};

}  // namespace fleetops::allocman
