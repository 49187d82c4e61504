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

#include "allocman/allocman.h"

#include <algorithm>

#include "common/error.h"

namespace fleetops::allocman {

using topology::NodeKind;
using topology::Vlan;

std::string_view AllocStateName(AllocState s) {
  switch (s) {
    case AllocState::kQueued: return "Queued";
    case AllocState::kActive: return "Active";
    case AllocState::kCompleted: return "Completed";
    case AllocState::kCancelled: return "Cancelled";
  }
  return "?";
}

std::string_view SystemStateName(SystemState s) {
  switch (s) {
    case SystemState::kFree: return "Free";
    case SystemState::kAllocated: return "Allocated";
    case SystemState::kDrained: return "Drained";
  }
  return "?";
}

FirewallRuleSet DeriveFirewall(const Topology &topo, const std::vector<Allocation> &allocations,
                               std::uint64_t generation) {
  FirewallRuleSet r;
  r.generation = generation;
  for (const auto &a : allocations)
    if (a.state == AllocState::kActive && a.system) r.allow.emplace(a.node, topo.systems()[*a.system].id);
  return r;
}

nlohmann::json ToJson(const AllocLogRecord &r) {
  return {{"t", r.t},         {"op", r.op},         {"user", r.user},
          {"node", r.node},   {"system", r.system}, {"alloc_id", r.alloc_id},
          {"generation", r.generation}};
}

AllocLogRecord AllocLogRecordFromJson(const nlohmann::json &j) {
  try {
    AllocLogRecord r;
    r.t = j.at("t").get<Nanos>();
    r.op = j.at("op").get<std::string>();
    r.user = j.value("user", "");
    r.node = j.value("node", "");
    r.system = j.value("system", "");
    r.alloc_id = j.value("alloc_id", AllocId{0});
    r.generation = j.value("generation", std::uint64_t{0});
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParseError, std::string("allocation log record: ") + e.what());
  }
}

AllocManager::AllocManager(std::shared_ptr<const Topology> topo, std::vector<std::string> exempt)
    : topo_(std::move(topo)) {
  const std::size_t ns = topo_->systems().size();
  states_.assign(ns, SystemState::kFree);
  drain_pending_.assign(ns, false);
  active_on_.assign(ns, std::nullopt);
  allowed_.assign(topo_->nodes().size() * ns, 0);
  exempt_.assign(topo_->nodes().size(), false);
  for (const auto &name : exempt) exempt_[topo_->NodeByName(name)] = true;
  endpoint_system_.assign(topo_->nodes().size(), std::nullopt);
  for (SystemIndex s = 0; s < ns; ++s)
    for (NodeIndex f : topo_->systems()[s].fpgas) endpoint_system_[f] = s;
}

SystemIndex AllocManager::ResolveSystem(const std::string &id) const {
  auto s = topo_->FindSystem(id);
  if (!s) throw Error(ErrorCode::kUnknownSystem, id);
  return *s;
}

const Allocation &AllocManager::allocation(AllocId id) const {
  auto it = allocs_.find(id);
  if (it == allocs_.end()) throw Error(ErrorCode::kUnknownAllocation, std::to_string(id));
  return it->second;
}

std::size_t AllocManager::active_count() const {
  return std::count_if(active_on_.begin(), active_on_.end(), [](const auto &a) { return a.has_value(); });
}

std::optional<SystemIndex> AllocManager::FirstFit(const Allocation &a) const {
  if (a.selector == kAnyProductive) {
    for (SystemIndex s = 0; s < states_.size(); ++s)
      if (states_[s] == SystemState::kFree && topo_->systems()[s].productive) return s;
    return std::nullopt;
  }
  SystemIndex s = ResolveSystem(a.selector);
  if (states_[s] == SystemState::kFree) return s;
  return std::nullopt;
}

Allocation AllocManager::Submit(const AllocationRequest &req, Nanos now) {
  if (req.walltime <= 0) throw Error(ErrorCode::kInvalidArgument, "walltime must be positive");
  if (req.user.empty()) throw Error(ErrorCode::kInvalidArgument, "empty user");
  auto node = topo_->FindNode(req.node);
  if (!node) throw Error(ErrorCode::kUnknownEntity, "node " + req.node);
  NodeKind k = topo_->node(*node).kind;
  if (k != NodeKind::kClusterNode && k != NodeKind::kRemoteClusterNode)
    throw Error(ErrorCode::kInvalidArgument, req.node + " is not a cluster node");
  if (req.selector != kAnyProductive) {
    SystemIndex s = ResolveSystem(req.selector);
    if (states_[s] == SystemState::kDrained) throw Error(ErrorCode::kSystemDrained, req.selector);
  }

  Allocation a;
  a.id = next_id_++;
  a.user = req.user;
  a.node = req.node;
  a.selector = req.selector;
  a.walltime = req.walltime;
  a.t_submit = now;
  auto [it, _] = allocs_.emplace(a.id, a);
  Record(now, "submit", &it->second, "");
  if (auto s = FirstFit(it->second)) {
    Activate(it->second, *s, now);
    Rederive();
    Record(now, "activate", &it->second, topo_->systems()[*s].id);
  } else {
    queue_.push_back(a.id);
    Record(now, "queue", &it->second, "");
  }
  return it->second;
}

void AllocManager::Activate(Allocation &a, SystemIndex s, Nanos now) {
  a.state = AllocState::kActive;
  a.system = s;
  a.t_start = now;
  states_[s] = SystemState::kAllocated;
  active_on_[s] = a.id;
}

Allocation &AllocManager::Finish(AllocId id, Nanos now, const char *op) {
  auto it = allocs_.find(id);
  if (it == allocs_.end()) throw Error(ErrorCode::kUnknownAllocation, std::to_string(id));
  Allocation &a = it->second;
  if (a.state != AllocState::kActive) throw Error(ErrorCode::kNotActive, std::to_string(id));
  SystemIndex s = *a.system;
  a.state = AllocState::kCompleted;
  a.t_end = now;
  active_on_[s].reset();
  if (drain_pending_[s]) {
    drain_pending_[s] = false;
    states_[s] = SystemState::kDrained;
  } else {
    states_[s] = SystemState::kFree;
  }
  // Release and promotion land in one derivation.
  std::vector<AllocId> promoted = PromoteQueued(now);
  Rederive();
  Record(now, op, &a, topo_->systems()[s].id);
  for (AllocId p : promoted) Record(now, "activate", &allocs_.at(p), topo_->systems()[*allocs_.at(p).system].id);
  return a;
}

std::vector<AllocId> AllocManager::PromoteQueued(Nanos now) {
  std::vector<AllocId> promoted;
  for (auto it = queue_.begin(); it != queue_.end();) {
    Allocation &q = allocs_.at(*it);
    if (auto s = FirstFit(q)) {
      Activate(q, *s, now);
      promoted.push_back(q.id);
      it = queue_.erase(it);
    } else {
      ++it;
    }
  }
  return promoted;
}

Allocation AllocManager::Release(AllocId id, Nanos now) { return Finish(id, now, "release"); }

std::optional<Allocation> AllocManager::Expire(AllocId id, Nanos now) {
  auto it = allocs_.find(id);
  if (it == allocs_.end() || it->second.state != AllocState::kActive) return std::nullopt;
  return Finish(id, now, "expire");
}

Allocation AllocManager::Cancel(AllocId id, Nanos now) {
  auto it = allocs_.find(id);
  if (it == allocs_.end()) throw Error(ErrorCode::kUnknownAllocation, std::to_string(id));
  if (it->second.state != AllocState::kQueued)
    throw Error(ErrorCode::kInvalidArgument, "allocation " + std::to_string(id) + " is not queued");
  queue_.erase(std::find(queue_.begin(), queue_.end(), id));
  it->second.state = AllocState::kCancelled;
  it->second.t_end = now;
  Record(now, "cancel", &it->second, "");
  return it->second;
}

SystemState AllocManager::Drain(const std::string &system, Nanos now) {
  SystemIndex s = ResolveSystem(system);
  if (states_[s] == SystemState::kFree) {
    states_[s] = SystemState::kDrained;
    Record(now, "drain", nullptr, system);
  } else if (states_[s] == SystemState::kAllocated && !drain_pending_[s]) {
    drain_pending_[s] = true;
    Record(now, "drain_pending", nullptr, system);
  }
  return states_[s];
}

SystemState AllocManager::Undrain(const std::string &system, Nanos now) {
  SystemIndex s = ResolveSystem(system);
  if (drain_pending_[s]) {
    drain_pending_[s] = false;
    Record(now, "undrain", nullptr, system);
    return states_[s];
  }
  if (states_[s] != SystemState::kDrained) throw Error(ErrorCode::kNotDrained, system);
  states_[s] = SystemState::kFree;
  std::vector<AllocId> promoted = PromoteQueued(now);
  if (!promoted.empty()) Rederive();
  Record(now, "undrain", nullptr, system);
  for (AllocId p : promoted) Record(now, "activate", &allocs_.at(p), system);
  return states_[s];
}

void AllocManager::Rederive() {
  std::vector<Allocation> active;
  for (const auto &opt : active_on_)
    if (opt) active.push_back(allocs_.at(*opt));
  rules_ = DeriveFirewall(*topo_, active, rules_.generation + 1);
  const std::size_t ns = states_.size();
  std::fill(allowed_.begin(), allowed_.end(), 0);
  for (const auto &[node, system] : rules_.allow)
    allowed_[topo_->NodeByName(node) * ns + *topo_->FindSystem(system)] = 1;
}

bool AllocManager::Permit(const netsim::FrameHeader &f) const {
  if (f.vlan != Vlan::kExperimentData) return true;
  const std::size_t ns = states_.size();
  auto pair_ok = [&](NodeIndex node, NodeIndex endpoint) {
    auto s = endpoint_system_[endpoint];
    return s && (exempt_[node] || allowed_[node * ns + *s]);
  };
  return pair_ok(f.src, f.dst) || pair_ok(f.dst, f.src);
}

void AllocManager::Record(Nanos now, const char *op, const Allocation *a, const std::string &system) {
  AllocLogRecord r;
  r.t = now;
  r.op = op;
  if (a) {
    r.user = a->user;
    r.node = a->node;
    r.alloc_id = a->id;
  }
  r.system = system;
  r.generation = rules_.generation;
  log_.push_back(r);
  if (listener_) listener_(r, a ? *a : Allocation{});
}

}  // namespace fleetops::allocman
