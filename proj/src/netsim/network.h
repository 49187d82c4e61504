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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "common/time.h"
#include "netsim/event_loop.h"
#include "netsim/port_scheduler.h"
#include "netsim/stats.h"
#include "topology/routing.h"
#include "topology/topology.h"

namespace fleetops::netsim {

using topology::DirectedLink;
using topology::LinkIndex;
using topology::NodeIndex;
using topology::Topology;

struct NetConfig {
  /// Minimum share of each VLAN (index = VLAN id - 1); DRR quanta are
  /// proportional to these.
  std::array<double, kVlanCount> vlan_shares = {0.2 / 3, 0.2 / 3, 0.2 / 3, 0.8};
  std::uint32_t quantum_base_bytes = 15000;
  std::uint32_t queue_limit_bytes = 512 * 1024;
  std::uint32_t default_frame_bytes = 1500;
  std::uint32_t probe_frame_bytes = 64;
  Nanos probe_timeout = kSecond;
  /// Frames a Backlogged source keeps queued at its own NIC.
  std::uint32_t backlog_depth = 2;
  /// Keep a per-frame delivery record for every flow (needed for windowed
  /// measurements).
  bool record_deliveries = true;

  std::array<std::uint32_t, kVlanCount> Quanta() const;
};

inline constexpr std::uint32_t kMinFrameBytes = 64;
inline constexpr std::uint32_t kMaxFrameBytes = 9000;

enum class FlowMode { kConstantRate, kBacklogged };

struct FlowSpec {
  std::string name;
  NodeIndex src = 0;
  NodeIndex dst = 0;
  Vlan vlan = Vlan::kExperimentData;
  FlowMode mode = FlowMode::kConstantRate;
  double rate_bps = 0;
  std::uint32_t frame_bytes = 1500;
  Nanos start = 0;
  /// Exclusive end of emission; defaults to never.
  Nanos stop = std::numeric_limits<Nanos>::max();
};

using FlowId = std::uint32_t;

/// What the firewall hook sees of a frame.
struct FrameHeader {
  NodeIndex src;
  NodeIndex dst;
  Vlan vlan;
  std::uint32_t bytes;
};

/// Notification for experiment-VLAN frames: delivered at the destination or
/// rejected by the firewall at the first routed hop.
struct FrameEvent {
  enum class Kind { kDelivered, kFirewallDropped };
  Kind kind;
  FrameHeader header;
  Nanos enqueue_time;
  Nanos first_hop_time;
  Nanos time;
  std::optional<FlowId> flow;
};

struct ProbeResult {
  bool replied = false;
  Nanos rtt = 0;
};

/// Packet-level network model: per-directed-link egress ports with DRR
/// scheduling, store-and-forward switches, firewall evaluation at the first
/// routed hop, and power/link state driven by the fault layer.
class Network {
 public:
  using Firewall = std::function<bool(const FrameHeader &)>;
  using FrameObserver = std::function<void(const FrameEvent &)>;
  using ProbeCallback = std::function<void(const ProbeResult &)>;

  Network(std::shared_ptr<const Topology> topo, NetConfig config, EventLoop &loop);
  Network(const Network &) = delete;
  Network &operator=(const Network &) = delete;

  const Topology &topology() const { return *topo_; }
  const NetConfig &config() const { return config_; }
  EventLoop &loop() { return loop_; }

  FlowId AddFlow(const FlowSpec &spec);
  /// Ends emission at the current time; frames already queued still drain.
  void StopFlow(FlowId id);
  std::optional<FlowId> FindFlow(std::string_view name) const;

  /// 64 B request/reply exchange; `done` fires once with the RTT or a
  /// timeout after config().probe_timeout.
  void SendProbe(NodeIndex src, NodeIndex dst, Vlan vlan, ProbeCallback done);

  void SetFirewall(Firewall fw) { firewall_ = std::move(fw); }
  void SetFrameObserver(FrameObserver obs) { observer_ = std::move(obs); }

  void SetLinkUp(LinkIndex link, bool up);
  bool link_up(LinkIndex link) const { return link_up_[link]; }
  void SetNodePowered(NodeIndex node, bool powered);
  bool node_powered(NodeIndex node) const { return powered_[node]; }

  /// Advances the shared event loop and returns the live statistics.
  const SimStats &RunUntil(Nanos t_end);
  const SimStats &stats();
  /// Immutable copy for handing to other threads.
  SimStats Snapshot();

  const PortScheduler &port(DirectedLink d) const { return ports_[d].sched; }

  /// Bytes currently held in queues or on the wire.
  std::uint64_t in_flight_bytes() const { return in_flight_bytes_; }

 private:
  enum class FrameKind : std::uint8_t { kData, kProbeRequest, kProbeReply };

  struct Frame {
    std::uint32_t flow;
    NodeIndex src;
    NodeIndex dst;
    std::uint32_t bytes;
    std::uint32_t route;
    std::uint32_t probe;
    std::uint32_t link_epoch;
    std::uint16_t hop;
    Vlan vlan;
    FrameKind kind;
    Nanos enqueue_time;
    Nanos first_hop_time;
  };

  struct Port {
    PortScheduler sched;
    bool busy = false;
    Nanos tx_start = 0;
  };

  struct FlowState {
    FlowSpec spec;
    double interval_ns = 0;
    std::uint64_t emitted = 0;
    bool active = false;
    bool started = false;
    std::uint32_t backlog = 0;  // frames queued at the source NIC
  };

  struct Probe {
    ProbeCallback done;
    Nanos sent = 0;
    bool finished = false;
  };

  static constexpr std::uint32_t kNoFlow = 0xffffffffu;
  static constexpr std::uint32_t kNoRoute = 0xffffffffu;

  std::uint32_t Route(NodeIndex src, NodeIndex dst, Vlan vlan);
  std::uint32_t NewFrame(const Frame &f);
  void ReleaseFrame(std::uint32_t idx);
  /// Puts a frame at the egress of its current hop. Returns false on drop.
  bool Inject(std::uint32_t idx);
  void DropFrame(std::uint32_t idx, DropCause cause);
  void TryStartTx(DirectedLink d);
  void OnTxDone(DirectedLink d);
  void OnArrive(std::uint32_t idx);
  void Deliver(std::uint32_t idx);
  void OnEmit(FlowId id);
  bool EmitFrame(FlowId id);
  void PrimeBacklog(FlowId id);
  void FinishProbe(std::uint32_t probe, const ProbeResult &r);
  void InvalidateRoutes();
  void UpdateElapsed();

  std::shared_ptr<const Topology> topo_;
  NetConfig config_;
  EventLoop &loop_;
  EventLoop::EventType ev_tx_done_, ev_arrive_, ev_emit_, ev_probe_timeout_;

  std::vector<Port> ports_;
  std::vector<bool> link_up_;
  std::vector<std::uint32_t> link_epoch_;
  std::vector<bool> powered_;
  std::vector<Frame> frames_;
  std::vector<std::uint32_t> free_frames_;
  std::vector<topology::Path> routes_;
  std::map<std::tuple<NodeIndex, NodeIndex, int>, std::uint32_t> route_cache_;
  std::vector<FlowState> flows_;
  std::vector<Probe> probes_;
  Firewall firewall_;
  FrameObserver observer_;
  SimStats stats_;
  std::uint64_t in_flight_bytes_ = 0;
};

/// Windowed throughput and latency of one flow.
ThroughputReport MeasureFlow(const SimStats &stats, FlowId flow, Nanos t0, Nanos t1);
ThroughputReport MeasureFlow(const SimStats &stats, std::string_view flow, Nanos t0, Nanos t1);

}  // namespace fleetops::netsim
