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

#include "netsim/network.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.h"

namespace fleetops::netsim {

std::array<std::uint32_t, kVlanCount> NetConfig::Quanta() const {
  std::array<std::uint32_t, kVlanCount> q{};
  for (int i = 0; i < kVlanCount; ++i) {
    if (!(vlan_shares[i] > 0)) throw Error(ErrorCode::kInvalidConfig, "VLAN shares must be positive");
    q[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::llround(vlan_shares[i] * quantum_base_bytes)));
  }
  return q;
}

Network::Network(std::shared_ptr<const Topology> topo, NetConfig config, EventLoop &loop)
    : topo_(std::move(topo)), config_(config), loop_(loop) {
  const auto quanta = config_.Quanta();
  const std::size_t directed = topo_->links().size() * 2;
  ports_.reserve(directed);
  for (std::size_t i = 0; i < directed; ++i) ports_.push_back({PortScheduler(quanta, config_.queue_limit_bytes)});
  link_up_.assign(topo_->links().size(), true);
  link_epoch_.assign(topo_->links().size(), 0);
  powered_.assign(topo_->nodes().size(), true);
  stats_.ports.assign(directed, {});

  ev_tx_done_ = loop_.RegisterType([this](std::uint64_t d) { OnTxDone(static_cast<DirectedLink>(d)); });
  ev_arrive_ = loop_.RegisterType([this](std::uint64_t f) { OnArrive(static_cast<std::uint32_t>(f)); });
  ev_emit_ = loop_.RegisterType([this](std::uint64_t f) { OnEmit(static_cast<FlowId>(f)); });
  ev_probe_timeout_ = loop_.RegisterType([this](std::uint64_t p) {
    FinishProbe(static_cast<std::uint32_t>(p), ProbeResult{false, 0});
  });
}

FlowId Network::AddFlow(const FlowSpec &spec) {
  if (spec.frame_bytes < kMinFrameBytes || spec.frame_bytes > kMaxFrameBytes) {
    throw Error(ErrorCode::kInvalidArgument, "flow '" + spec.name + "': frame size outside [64, 9000]");
  }
  if (spec.mode == FlowMode::kConstantRate && !(spec.rate_bps > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "flow '" + spec.name + "': constant-rate flow needs rate > 0");
  }
  if (spec.start < loop_.now()) throw Error(ErrorCode::kInvalidArgument, "flow '" + spec.name + "' starts in the past");
  FlowId id = static_cast<FlowId>(flows_.size());
  FlowState fs;
  fs.spec = spec;
  if (spec.mode == FlowMode::kConstantRate) fs.interval_ns = spec.frame_bytes * 8.0 * 1e9 / spec.rate_bps;
  flows_.push_back(fs);
  FlowStats st;
  st.name = spec.name;
  st.vlan = spec.vlan;
  st.frame_bytes = spec.frame_bytes;
  stats_.flows.push_back(std::move(st));
  if (spec.start < spec.stop) loop_.Schedule(spec.start, ev_emit_, id);
  return id;
}

void Network::StopFlow(FlowId id) {
  FlowState &fs = flows_.at(id);
  fs.spec.stop = std::min(fs.spec.stop, loop_.now());
  fs.active = false;
}

std::optional<FlowId> Network::FindFlow(std::string_view name) const {
  for (FlowId i = 0; i < flows_.size(); ++i)
    if (flows_[i].spec.name == name) return i;
  return std::nullopt;
}

void Network::OnEmit(FlowId id) {
  FlowState &fs = flows_[id];
  if (loop_.now() >= fs.spec.stop) return;
  fs.started = true;
  fs.active = true;
  if (fs.spec.mode == FlowMode::kBacklogged) {
    PrimeBacklog(id);
    return;
  }
  EmitFrame(id);
  FlowState &cur = flows_[id];
  ++cur.emitted;
  Nanos next = cur.spec.start + static_cast<Nanos>(std::llround(static_cast<double>(cur.emitted) * cur.interval_ns));
  if (next < cur.spec.stop && cur.active) loop_.Schedule(next, ev_emit_, id);
}

void Network::PrimeBacklog(FlowId id) {
  while (flows_[id].active && flows_[id].backlog < config_.backlog_depth) {
    if (!EmitFrame(id)) break;
  }
}

bool Network::EmitFrame(FlowId id) {
  const FlowSpec &spec = flows_[id].spec;
  if (!powered_[spec.src]) return false;
  Frame f{};
  f.flow = id;
  f.src = spec.src;
  f.dst = spec.dst;
  f.bytes = spec.frame_bytes;
  f.vlan = spec.vlan;
  f.kind = FrameKind::kData;
  f.enqueue_time = loop_.now();
  f.first_hop_time = -1;
  f.route = Route(spec.src, spec.dst, spec.vlan);
  f.probe = 0;
  FlowStats &st = stats_.flows[id];
  st.offered_bytes += f.bytes;
  ++st.offered_frames;
  std::uint32_t idx = NewFrame(f);
  if (f.route == kNoRoute) {
    DropFrame(idx, DropCause::kNoRoute);
    return false;
  }
  if (spec.mode == FlowMode::kBacklogged) ++flows_[id].backlog;
  if (!Inject(idx)) {
    return false;
  }
  return true;
}

std::uint32_t Network::Route(NodeIndex src, NodeIndex dst, Vlan vlan) {
  auto key = std::make_tuple(src, dst, topology::VlanIndex(vlan));
  if (auto it = route_cache_.find(key); it != route_cache_.end()) return it->second;
  std::uint32_t id = kNoRoute;
  try {
    auto path = topology::ResolvePath(*topo_, src, dst, vlan, [this](LinkIndex l) { return bool(link_up_[l]); });
    if (!path.empty()) {
      id = static_cast<std::uint32_t>(routes_.size());
      routes_.push_back(std::move(path));
    }
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kNoPath) throw;
  }
  route_cache_[key] = id;
  return id;
}

void Network::InvalidateRoutes() { route_cache_.clear(); }

std::uint32_t Network::NewFrame(const Frame &f) {
  in_flight_bytes_ += f.bytes;
  stats_.offered_bytes += f.bytes;
  if (!free_frames_.empty()) {
    std::uint32_t idx = free_frames_.back();
    free_frames_.pop_back();
    frames_[idx] = f;
    return idx;
  }
  frames_.push_back(f);
  return static_cast<std::uint32_t>(frames_.size() - 1);
}

void Network::ReleaseFrame(std::uint32_t idx) {
  in_flight_bytes_ -= frames_[idx].bytes;
  free_frames_.push_back(idx);
}

void Network::DropFrame(std::uint32_t idx, DropCause cause) {
  const Frame &f = frames_[idx];
  if (f.kind == FrameKind::kData) ++stats_.flows[f.flow].dropped_frames[static_cast<int>(cause)];
  stats_.dropped_bytes += f.bytes;
  ReleaseFrame(idx);
}

bool Network::Inject(std::uint32_t idx) {
  const Frame &f = frames_[idx];
  DirectedLink d = routes_[f.route][f.hop];
  if (!link_up_[topology::LinkOf(d)]) {
    if (f.hop == 0 && f.kind == FrameKind::kData && flows_[f.flow].spec.mode == FlowMode::kBacklogged)
      --flows_[f.flow].backlog;
    DropFrame(idx, DropCause::kLinkDown);
    return false;
  }
  if (!ports_[d].sched.Enqueue(f.vlan, {idx, f.bytes})) {
    ++stats_.ports[d].drops[topology::VlanIndex(f.vlan)];
    if (f.hop == 0 && f.kind == FrameKind::kData && flows_[f.flow].spec.mode == FlowMode::kBacklogged)
      --flows_[f.flow].backlog;
    DropFrame(idx, DropCause::kQueueFull);
    return false;
  }
  TryStartTx(d);
  return true;
}

void Network::TryStartTx(DirectedLink d) {
  Port &port = ports_[d];
  if (port.busy) return;
  LinkIndex l = topology::LinkOf(d);
  if (!link_up_[l] || !powered_[topo_->Source(d)]) return;
  auto next = port.sched.Select();
  if (!next) return;
  std::uint32_t idx = next->second.frame;
  Frame &f = frames_[idx];
  const topology::Link &link = topo_->link(l);
  Nanos tx = std::max<Nanos>(1, static_cast<Nanos>(std::llround(f.bytes * 8.0 * 1e9 / link.capacity_bps)));
  port.busy = true;
  port.tx_start = loop_.now();
  f.link_epoch = link_epoch_[l];
  PortStats &ps = stats_.ports[d];
  ps.tx_bytes[topology::VlanIndex(f.vlan)] += f.bytes;
  ++ps.tx_frames[topology::VlanIndex(f.vlan)];
  loop_.Schedule(loop_.now() + tx, ev_tx_done_, d);
  loop_.Schedule(loop_.now() + tx + link.propagation, ev_arrive_, idx);
  if (f.hop == 0 && f.kind == FrameKind::kData) {
    FlowId id = f.flow;
    if (flows_[id].spec.mode == FlowMode::kBacklogged) {
      --flows_[id].backlog;
      if (flows_[id].active && loop_.now() < flows_[id].spec.stop) PrimeBacklog(id);
    }
  }
}

void Network::OnTxDone(DirectedLink d) {
  Port &port = ports_[d];
  port.busy = false;
  stats_.ports[d].busy += loop_.now() - port.tx_start;
  TryStartTx(d);
}

void Network::OnArrive(std::uint32_t idx) {
  Frame &f = frames_[idx];
  DirectedLink d = routes_[f.route][f.hop];
  LinkIndex l = topology::LinkOf(d);
  if (!link_up_[l] || link_epoch_[l] != f.link_epoch) {
    DropFrame(idx, DropCause::kLinkDown);
    return;
  }
  NodeIndex at = topo_->Target(d);
  if (!powered_[at]) {
    DropFrame(idx, DropCause::kPoweredOff);
    return;
  }
  if (f.hop == 0) {
    f.first_hop_time = loop_.now();
    if (f.vlan == Vlan::kExperimentData && firewall_) {
      FrameHeader h{f.src, f.dst, f.vlan, f.bytes};
      if (!firewall_(h)) {
        if (observer_) {
          std::optional<FlowId> flow;
          if (f.kind == FrameKind::kData) flow = f.flow;
          observer_({FrameEvent::Kind::kFirewallDropped, h, f.enqueue_time, f.first_hop_time, loop_.now(), flow});
        }
        DropFrame(idx, DropCause::kFirewall);
        return;
      }
    }
  }
  if (at == f.dst) {
    Deliver(idx);
    return;
  }
  ++f.hop;
  Inject(idx);
}

void Network::Deliver(std::uint32_t idx) {
  const Frame f = frames_[idx];
  const Nanos now = loop_.now();
  stats_.delivered_bytes += f.bytes;
  ReleaseFrame(idx);
  switch (f.kind) {
    case FrameKind::kData: {
      FlowStats &st = stats_.flows[f.flow];
      st.delivered_bytes += f.bytes;
      ++st.delivered_frames;
      Nanos latency = now - f.enqueue_time;
      st.latency_sum_s += ToSeconds(latency);
      if (config_.record_deliveries) {
        st.delivery_times.push_back(now);
        st.latencies_ns.push_back(static_cast<std::uint32_t>(
            std::min<Nanos>(latency, std::numeric_limits<std::uint32_t>::max())));
      }
      if (observer_ && f.vlan == Vlan::kExperimentData) {
        observer_({FrameEvent::Kind::kDelivered, {f.src, f.dst, f.vlan, f.bytes}, f.enqueue_time, f.first_hop_time,
                   now, f.flow});
      }
      break;
    }
    case FrameKind::kProbeRequest: {
      if (probes_[f.probe].finished) break;
      Frame reply{};
      reply.flow = kNoFlow;
      reply.src = f.dst;
      reply.dst = f.src;
      reply.bytes = f.bytes;
      reply.vlan = f.vlan;
      reply.kind = FrameKind::kProbeReply;
      reply.probe = f.probe;
      reply.enqueue_time = now;
      reply.first_hop_time = -1;
      reply.route = Route(reply.src, reply.dst, reply.vlan);
      if (reply.route == kNoRoute) break;
      Inject(NewFrame(reply));
      break;
    }
    case FrameKind::kProbeReply:
      FinishProbe(f.probe, ProbeResult{true, now - probes_[f.probe].sent});
      break;
  }
}

void Network::SendProbe(NodeIndex src, NodeIndex dst, Vlan vlan, ProbeCallback done) {
  std::uint32_t id = static_cast<std::uint32_t>(probes_.size());
  probes_.push_back({std::move(done), loop_.now(), false});
  ++stats_.probes_sent;
  loop_.Schedule(loop_.now() + config_.probe_timeout, ev_probe_timeout_, id);
  if (!powered_[src]) return;
  Frame f{};
  f.flow = kNoFlow;
  f.src = src;
  f.dst = dst;
  f.bytes = config_.probe_frame_bytes;
  f.vlan = vlan;
  f.kind = FrameKind::kProbeRequest;
  f.probe = id;
  f.enqueue_time = loop_.now();
  f.first_hop_time = -1;
  f.route = Route(src, dst, vlan);
  if (f.route == kNoRoute) return;
  Inject(NewFrame(f));
}

void Network::FinishProbe(std::uint32_t id, const ProbeResult &r) {
  Probe &p = probes_[id];
  if (p.finished) return;
  p.finished = true;
  if (r.replied) ++stats_.probes_answered;
  auto done = std::move(p.done);
  p.done = nullptr;
  if (done) done(r);
}

void Network::SetLinkUp(LinkIndex link, bool up) {
  if (link_up_[link] == up) return;
  link_up_[link] = up;
  ++link_epoch_[link];
  InvalidateRoutes();
  for (DirectedLink d : {topology::Directed(link, false), topology::Directed(link, true)}) {
    if (!up) {
      ports_[d].sched.Flush([&](Vlan v, const PortScheduler::Entry &e) {
        ++stats_.ports[d].drops[topology::VlanIndex(v)];
        const Frame &f = frames_[e.frame];
        if (f.hop == 0 && f.kind == FrameKind::kData && flows_[f.flow].spec.mode == FlowMode::kBacklogged)
          --flows_[f.flow].backlog;
        DropFrame(e.frame, DropCause::kLinkDown);
      });
    } else {
      TryStartTx(d);
    }
  }
}

void Network::SetNodePowered(NodeIndex node, bool powered) {
  if (powered_[node] == powered) return;
  powered_[node] = powered;
  if (!powered) {
    for (const auto &adj : topo_->adjacent(node)) {
      DirectedLink d = adj.outgoing;
      ports_[d].sched.Flush([&](Vlan, const PortScheduler::Entry &e) {
        const Frame &f = frames_[e.frame];
        if (f.hop == 0 && f.kind == FrameKind::kData && flows_[f.flow].spec.mode == FlowMode::kBacklogged)
          --flows_[f.flow].backlog;
        DropFrame(e.frame, DropCause::kPoweredOff);
      });
    }
    return;
  }
  for (FlowId id = 0; id < flows_.size(); ++id) {
    const FlowState &fs = flows_[id];
    if (fs.spec.src == node && fs.spec.mode == FlowMode::kBacklogged && fs.active && loop_.now() < fs.spec.stop)
      PrimeBacklog(id);
  }
}

const SimStats &Network::RunUntil(Nanos t_end) {
  loop_.RunUntil(t_end);
  return stats();
}

const SimStats &Network::stats() {
  stats_.elapsed = loop_.now();
  return stats_;
}

SimStats Network::Snapshot() { return stats(); }

ThroughputReport MeasureFlow(const SimStats &stats, FlowId flow, Nanos t0, Nanos t1) {
  if (t1 <= t0) throw Error(ErrorCode::kInvalidArgument, "measurement window must have t1 > t0");
  if (flow >= stats.flows.size()) throw Error(ErrorCode::kUnknownFlow, "flow #" + std::to_string(flow));
  const FlowStats &fs = stats.flows[flow];
  ThroughputReport r;
  auto first = std::lower_bound(fs.delivery_times.begin(), fs.delivery_times.end(), t0);
  auto last = std::upper_bound(fs.delivery_times.begin(), fs.delivery_times.end(), t1);
  auto begin_idx = static_cast<std::size_t>(first - fs.delivery_times.begin());
  auto end_idx = static_cast<std::size_t>(last - fs.delivery_times.begin());
  if (end_idx <= begin_idx) return r;
  r.delivered_frames = end_idx - begin_idx;
  r.delivered_bytes = r.delivered_frames * fs.frame_bytes;
  r.throughput_bps = static_cast<double>(r.delivered_bytes) * 8.0 / ToSeconds(t1 - t0);
  std::vector<std::uint32_t> lat(fs.latencies_ns.begin() + begin_idx, fs.latencies_ns.begin() + end_idx);
  double sum = 0;
  for (auto v : lat) sum += v;
  r.latency_mean_s = sum / static_cast<double>(lat.size()) * 1e-9;
  std::sort(lat.begin(), lat.end());
  auto pct = [&](double p) {
    std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(lat.size()))) ;
    k = std::clamp<std::size_t>(k, 1, lat.size());
    return lat[k - 1] * 1e-9;
  };
  r.latency_p50_s = pct(0.50);
  r.latency_p99_s = pct(0.99);
  r.latency_max_s = lat.back() * 1e-9;
  return r;
}

ThroughputReport MeasureFlow(const SimStats &stats, std::string_view flow, Nanos t0, Nanos t1) {
  for (FlowId i = 0; i < stats.flows.size(); ++i)
    if (stats.flows[i].name == flow) return MeasureFlow(stats, i, t0, t1);
  throw Error(ErrorCode::kUnknownFlow, std::string(flow));
}

}  // namespace fleetops::netsim
