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

#include "netsim/port_scheduler.h"

#include "common/error.h"

namespace fleetops::netsim {

PortScheduler::PortScheduler(const std::array<std::uint32_t, kVlanCount> &quanta, std::uint32_t queue_limit_bytes)
    : limit_(queue_limit_bytes) {
  for (int i = 0; i < kVlanCount; ++i) {
    if (quanta[i] == 0) throw Error(ErrorCode::kInvalidConfig, "DRR quantum must be positive");
    queues_[i].quantum = quanta[i];
  }
}

bool PortScheduler::Enqueue(Vlan vlan, Entry entry) {
  Queue &q = queues_[topology::VlanIndex(vlan)];
  if (q.bytes + entry.bytes > limit_) return false;
  if (q.frames.empty()) active_.push_back(topology::VlanIndex(vlan));
  q.frames.push_back(entry);
  q.bytes += entry.bytes;
  return true;
}

std::optional<std::pair<Vlan, PortScheduler::Entry>> PortScheduler::Select() {
  while (!active_.empty()) {
    int v = active_.front();
    Queue &q = queues_[v];
    if (!credited_) {
      q.deficit += q.quantum;
      credited_ = true;
    }
    const Entry head = q.frames.front();
    if (head.bytes <= q.deficit) {
      q.frames.pop_front();
      q.bytes -= head.bytes;
      q.deficit -= head.bytes;
      if (q.frames.empty()) {
        q.deficit = 0;
        active_.pop_front();
        credited_ = false;
      }
      return std::make_pair(topology::kAllVlans[v], head);
    }
    active_.pop_front();
    active_.push_back(v);
    credited_ = false;
  }
  return std::nullopt;
}

}  // namespace fleetops::netsim
