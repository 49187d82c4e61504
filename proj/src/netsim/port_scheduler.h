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
#include <deque>
#include <optional>

#include "topology/topology.h"

namespace fleetops::netsim {

using topology::Vlan;
using topology::kVlanCount;

/// Deficit round robin over the four per-VLAN FIFOs of one egress port.
///
/// A VLAN with queued bytes sits in the active list. When it reaches the head
/// of the list it is credited its quantum once, sends head frames while the
/// deficit covers them, and then rotates to the tail. An emptied queue leaves
/// the list with its deficit reset to zero.
class PortScheduler {
 public:
  struct Entry {
    std::uint32_t frame;
    std::uint32_t bytes;
  };

  PortScheduler(const std::array<std::uint32_t, kVlanCount> &quanta, std::uint32_t queue_limit_bytes);

  /// Tail-drop admission. Returns false when the VLAN queue would exceed its
  /// byte bound.
  bool Enqueue(Vlan vlan, Entry entry);

  /// Next frame to put on the wire, or nullopt when every queue is empty.
  std::optional<std::pair<Vlan, Entry>> Select();

  bool Empty() const { return active_.empty(); }
  std::uint32_t queued_bytes(Vlan v) const { return queues_[topology::VlanIndex(v)].bytes; }
  std::size_t queued_frames(Vlan v) const { return queues_[topology::VlanIndex(v)].frames.size(); }
  std::uint32_t deficit(Vlan v) const { return queues_[topology::VlanIndex(v)].deficit; }
  std::uint32_t quantum(Vlan v) const { return queues_[topology::VlanIndex(v)].quantum; }

  /// Removes every queued frame, reporting each to `sink`.
  template <typename Sink>
  void Flush(Sink &&sink) {
    for (int i = 0; i < kVlanCount; ++i) {
      for (const Entry &e : queues_[i].frames) sink(topology::kAllVlans[i], e);
      queues_[i].frames.clear();
      queues_[i].bytes = 0;
      queues_[i].deficit = 0;
    }
    active_.clear();
    credited_ = false;
  }

 private:
  struct Queue {
    std::deque<Entry> frames;
    std::uint32_t bytes = 0;
    std::uint32_t quantum = 0;
    std::uint32_t deficit = 0;
  };

  std::array<Queue, kVlanCount> queues_;
  std::deque<int> active_;
  bool credited_ = false;
  std::uint32_t limit_;
};

}  // namespace fleetops::netsim
