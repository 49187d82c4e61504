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
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "common/hash.h"
#include "common/time.h"

namespace fleetops::netsim {

/// Single-threaded discrete-event core shared by every subsystem of a run.
///
/// Events are ordered by (time, sequence number); the sequence number is
/// assigned when the event is scheduled, so same-time events run in the order
/// they were created. Every processed event is folded into a running FNV-1a
/// fingerprint which identifies the trace.
class EventLoop {
 public:
  using EventType = std::uint32_t;
  using Handler = std::function<void(std::uint64_t arg)>;

  EventLoop();

  EventType RegisterType(Handler handler);

  void Schedule(Nanos t, EventType type, std::uint64_t arg);
  /// One-shot callback at absolute time `t` (>= now).
  void At(Nanos t, std::function<void()> fn);
  void After(Nanos delay, std::function<void()> fn) { At(now_ + delay, std::move(fn)); }

  /// Processes every event with time <= t_end, then advances the clock to
  /// t_end.
  void RunUntil(Nanos t_end);
  /// Processes the next event, if any, provided it is not later than
  /// `limit`. Returns false when nothing was processed.
  bool Step(Nanos limit);

  Nanos now() const { return now_; }
  std::uint64_t trace_hash() const { return hash_.digest(); }
  std::uint64_t processed() const { return processed_; }
  std::size_t pending() const { return queue_.size(); }
  std::optional<Nanos> next_time() const;

 private:
  struct Event {
    Nanos t;
    std::uint64_t seq;
    EventType type;
    std::uint64_t arg;
  };
  struct Later {
    bool operator()(const Event &a, const Event &b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
  };

  void RunCallback(std::uint64_t slot);

  Nanos now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  Fnv1a hash_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<Handler> handlers_;
  std::vector<std::function<void()>> callbacks_;
  std::vector<std::uint64_t> free_slots_;
  EventType callback_type_ = 0;
};

}  // namespace fleetops::netsim
