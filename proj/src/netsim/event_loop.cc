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

#include "netsim/event_loop.h"

#include <optional>

#include "common/error.h"

namespace fleetops::netsim {

EventLoop::EventLoop() {
  callback_type_ = RegisterType([this](std::uint64_t slot) { RunCallback(slot); });
}

EventLoop::EventType EventLoop::RegisterType(Handler handler) {
  handlers_.push_back(std::move(handler));
  return static_cast<EventType>(handlers_.size() - 1);
}

void EventLoop::Schedule(Nanos t, EventType type, std::uint64_t arg) {
  if (t < now_) {
    throw Error(ErrorCode::kInvalidArgument, "event scheduled in the past");
  }
  queue_.push({t, seq_++, type, arg});
}

void EventLoop::At(Nanos t, std::function<void()> fn) {
  std::uint64_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
    callbacks_[slot] = std::move(fn);
  } else {
    slot = callbacks_.size();
    callbacks_.push_back(std::move(fn));
  }
  Schedule(t, callback_type_, slot);
}

void EventLoop::RunCallback(std::uint64_t slot) {
  auto fn = std::move(callbacks_[slot]);
  callbacks_[slot] = nullptr;
  free_slots_.push_back(slot);
  fn();
}

bool EventLoop::Step(Nanos limit) {
  if (queue_.empty() || queue_.top().t > limit) return false;
  Event e = queue_.top();
  queue_.pop();
  now_ = e.t;
  ++processed_;
  hash_.UpdateValue(e.t);
  hash_.UpdateValue(e.type);
  hash_.UpdateValue(e.arg);
  handlers_[e.type](e.arg);
  return true;
}

void EventLoop::RunUntil(Nanos t_end) {
  if (t_end < now_) throw Error(ErrorCode::kInvalidArgument, "run_until target precedes current time");
  while (Step(t_end)) {
  }
  now_ = t_end;
}

std::optional<Nanos> EventLoop::next_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().t;
}

}  // namespace fleetops::netsim
