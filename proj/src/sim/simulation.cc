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

#include "sim/simulation.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common/error.h"
#include "common/hash.h"
#include "common/line_format.h"

namespace fleetops::sim {

using nlohmann::json;
using topology::NodeKind;
using topology::Vlan;

namespace {

double Seconds(Nanos t) { return ToSeconds(t); }

Nanos SecondsField(const json &j, const char *key, Nanos fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be a number");
  return FromSeconds(j.at(key).get<double>());
}

std::string StringField(const json &j, const char *key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw Error(ErrorCode::kInvalidArgument, std::string("missing string field ") + key);
  return j.at(key).get<std::string>();
}

json AllocationJson(const allocman::Allocation &a, const topology::Topology &topo) {
  json j = {{"alloc_id", a.id},
            {"user", a.user},
            {"node", a.node},
            {"selector", a.selector},
            {"state", allocman::AllocStateName(a.state)},
            {"walltime", Seconds(a.walltime)},
            {"t_submit", Seconds(a.t_submit)}};
  j["system"] = a.system ? json(topo.systems()[*a.system].id) : json(nullptr);
  if (a.t_start >= 0) j["t_start"] = Seconds(a.t_start);
  if (a.t_end >= 0) j["t_end"] = Seconds(a.t_end);
  return j;
}

json HealthJson(const device::HealthReport &r) {
  return {{"system", r.system},
          {"t", Seconds(r.t)},
          {"sram_ok", r.sram_ok},
          {"highspeed_links_ok", r.highspeed_links_ok},
          {"asic_supplies_ok", r.asic_supplies_ok},
          {"fpga_design_revision", r.fpga_design_revision}};
}

void WriteLines(const std::string &path, const std::vector<json> &lines) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const json &j : lines) out << j.dump() << '\n';
}

}  // namespace

json ToJson(const StreamEvent &e) { return {{"seq", e.seq}, {"t", Seconds(e.t)}, {"type", e.type}, {"data", e.data}}; }

json ToJson(const FrameRun &r) {
  return {{"kind", r.delivered ? "delivered" : "firewall_drop"},
          {"src", r.src},
          {"dst", r.dst},
          {"generation", r.generation},
          {"count", r.count},
          {"hop_min_ns", r.hop_min},
          {"hop_max_ns", r.hop_max},
          {"enq_min_ns", r.enq_min},
          {"enq_max_ns", r.enq_max}};
}

FrameRun FrameRunFromJson(const json &j) {
  FrameRun r;
  r.delivered = j.at("kind").get<std::string>() == "delivered";
  r.src = j.at("src").get<std::string>();
  r.dst = j.at("dst").get<std::string>();
  r.generation = j.at("generation").get<std::uint64_t>();
  r.count = j.at("count").get<std::uint64_t>();
  r.hop_min = j.at("hop_min_ns").get<Nanos>();
  r.hop_max = j.at("hop_max_ns").get<Nanos>();
  r.enq_min = j.at("enq_min_ns").get<Nanos>();
  r.enq_max = j.at("enq_max_ns").get<Nanos>();
  return r;
}

json ToJson(const HealthRecord &r) {
  json j = {{"seq", r.seq}, {"t_ns", r.t}, {"system", r.system}};
  if (r.report) j["report"] = HealthJson(*r.report);
  if (!r.skipped.empty()) j["skipped"] = r.skipped;
  return j;
}

HealthRecord HealthRecordFromJson(const json &j) {
  HealthRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.t = j.at("t_ns").get<Nanos>();
  r.system = j.at("system").get<std::string>();
  if (j.contains("skipped")) r.skipped = j.at("skipped").get<std::string>();
  if (j.contains("report")) {
    const json &h = j.at("report");
    device::HealthReport rep;
    rep.system = r.system;
    rep.t = r.t;
    rep.sram_ok = h.at("sram_ok").get<bool>();
    rep.highspeed_links_ok = h.at("highspeed_links_ok").get<bool>();
    rep.asic_supplies_ok = h.at("asic_supplies_ok").get<bool>();
    rep.fpga_design_revision = h.at("fpga_design_revision").get<std::string>();
    r.report = rep;
  }
  return r;
}

Simulation::Simulation(faults::Scenario scenario, std::string staging_root)
    : scenario_(std::move(scenario)),
      topo_(scenario_.topology),
      alloc_(topo_, scenario_.firewall_exempt),
      device_(topo_, scenario_.seed),
      store_(scenario_.monitor.tiers),
      staging_(std::move(staging_root)),
      ci_(scenario_.cicd.pools, &staging_),
      rng_(SplitMix64(scenario_.seed ^ 0x5eed5eedULL)) {
  if (scenario_.duration <= 0) throw Error(ErrorCode::kInvalidConfig, "duration must be positive");
  net_ = std::make_unique<netsim::Network>(topo_, scenario_.net, loop_);
  seeded_checksum_ = ci_.stable_checksum();

  const auto &systems = topo_->systems();
  counters_.health_reports.assign(systems.size(), 0);
  counters_.health_skipped.assign(systems.size(), 0);
  ctrl_up_.assign(systems.size(), true);
  ctrl_outages_.assign(systems.size(), {});
  for (topology::NodeIndex n = 0; n < topo_->nodes().size(); ++n)
    if (topo_->node(n).kind == NodeKind::kCentralMonitorHost) monitor_host_ = n;

  telemetry_series_.resize(systems.size());
  for (SystemIndex s = 0; s < systems.size(); ++s)
    for (int c = 0; c < device::kChannelCount; ++c)
      telemetry_series_[s][c] = store_.Series(systems[s].id + "." + std::string(device::Channels()[c].name));
  sample_buf_.resize(device::kChannelCount);

  generations_.emplace_back(0, alloc_.rules().generation);
  net_->SetFirewall([this](const netsim::FrameHeader &h) { return alloc_.Permit(h); });
  net_->SetFrameObserver([this](const netsim::FrameEvent &e) { OnFrame(e); });
  alloc_.SetListener([this](const allocman::AllocLogRecord &r, const allocman::Allocation &a) { OnAllocRecord(r, a); });
  ci_.SetObserver([this](const cicd::PipelineLogRecord &r) { Emit("pipeline", ToJson(r)); });
  ci_.SetStartJob([this](const std::string &p, cicd::Job j, Nanos now) { OnCiStart(p, j, now); });

  fault_state_.assign(scenario_.faults.size(), FaultState::kPending);
  fault_components_.assign(scenario_.faults.size(), {});
  fault_flows_.assign(scenario_.faults.size(), std::nullopt);

  // Scenario actions go in first so that, at equal times, they precede the
  // monitoring cadences.
  ScheduleScenario();
  ScheduleCadences();
}

Simulation::~Simulation() = default;

void Simulation::RunUntil(Nanos t) {
  net_->RunUntil(std::min(t, scenario_.duration));
}

void Simulation::Emit(const std::string &type, json data) {
  StreamEvent e;
  e.seq = events_.size() + 1;
  e.t = loop_.now();
  e.type = type;
  e.data = std::move(data);
  events_.push_back(std::move(e));
}

void Simulation::Periodic(Nanos first, Nanos period, std::function<void(Nanos)> fn, std::optional<Nanos> until) {
  const Nanos end = until ? std::min(*until, scenario_.duration) : scenario_.duration;
  if (first >= end) return;
  auto shared = std::make_shared<std::function<void(Nanos)>>(std::move(fn));
  auto step = std::make_shared<std::function<void()>>();
  *step = [this, period, end, shared, step]() {
    const Nanos t = loop_.now();
    (*shared)(t);
    if (t + period < end) loop_.At(t + period, *step);
  };
  loop_.At(first, *step);
}

// ---------------------------------------------------------------------------
// Scenario schedule

void Simulation::ScheduleScenario() {
  const topology::Topology &topo = *topo_;
  for (const faults::AllocDecl &d : scenario_.allocations) {
    loop_.At(d.at, [this, d]() {
      AllocInfo info;
      info.hold = d.hold;
      info.traffic = d.traffic;
      try {
        Submit(d.request, info);
      } catch (const Error &e) {
        Emit("error", {{"source", "allocation"}, {"message", e.what()}});
      }
    });
  }

  if (scenario_.random_allocations) {
    const faults::RandomAllocations &r = *scenario_.random_allocations;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Nanos> times(r.count);
    for (Nanos &t : times) t = static_cast<Nanos>(unit(rng_) * static_cast<double>(r.span));
    std::sort(times.begin(), times.end());
    std::vector<std::string> nodes;
    for (topology::NodeIndex n = 0; n < topo.nodes().size(); ++n)
      if (topo.node(n).kind == NodeKind::kClusterNode || topo.node(n).kind == NodeKind::kRemoteClusterNode)
        nodes.push_back(topo.node(n).id);
    for (int i = 0; i < r.count; ++i) {
      allocman::AllocationRequest req;
      const int user = i % std::max(1, r.users);
      req.user = "user" + std::to_string(user + 1);
      req.node = nodes[static_cast<std::size_t>(user) % nodes.size()];
      req.selector = topo.systems()[rng_() % topo.systems().size()].id;
      const Nanos hold = r.hold_min + static_cast<Nanos>(unit(rng_) * static_cast<double>(r.hold_max - r.hold_min));
      // A tenth of the requests ask for less walltime than they hold, so the
      // expiry path sees traffic too.
      req.walltime = unit(rng_) < 0.1 ? std::max<Nanos>(kSecond, hold / 2) : hold + kMinute;
      AllocInfo info;
      info.hold = hold;
      info.traffic = true;
      loop_.At(times[i], [this, req, info]() {
        try {
          Submit(req, info);
        } catch (const Error &e) {
          Emit("error", {{"source", "allocation"}, {"message", e.what()}});
        }
      });
    }
  }

  for (const faults::FlowDecl &d : scenario_.flows) {
    netsim::FlowSpec spec;
    spec.name = d.name;
    spec.src = topo.NodeByName(d.src);
    spec.dst = topo.NodeByName(d.dst);
    spec.vlan = d.vlan;
    spec.mode = d.mode;
    spec.rate_bps = d.rate_bps;
    spec.frame_bytes = d.frame_bytes;
    spec.start = d.start;
    if (d.stop) spec.stop = *d.stop;
    StartFlow(spec, "workload");
  }

  for (std::size_t i = 0; i < scenario_.faults.size(); ++i) {
    const faults::FaultEvent &f = scenario_.faults[i];
    loop_.At(f.at, [this, i]() { ApplyFault(i); });
    if (f.duration) loop_.At(f.at + *f.duration, [this, i]() { RevertFault(i); });
  }

  for (const faults::CicdEvent &e : scenario_.cicd_events) loop_.At(e.at, [this, e]() { RunCicdEvent(e); });

  for (const faults::CommandDecl &c : scenario_.commands) {
    loop_.At(c.at, [this, c]() {
      try {
        Apply(c.command);
      } catch (const Error &e) {
        Emit("error", {{"source", "command"}, {"command", c.command}, {"message", e.what()}});
      }
    });
  }
}

void Simulation::ScheduleCadences() {
  const faults::MonitorConfig &m = scenario_.monitor;
  if (m.telemetry) Periodic(0, m.telemetry_period, [this](Nanos t) { TelemetryTick(t); }, m.telemetry_until);
  if (m.probes) Periodic(0, m.probe_period, [this](Nanos t) { ProbeCycle(t); });
  if (m.health_checks) Periodic(0, m.health_period, [this](Nanos t) { HealthSweep(t); });
  if (m.fidelity) Periodic(0, m.fidelity_period, [this](Nanos t) { StartFidelity(t); });
  Periodic(m.retention_period, m.retention_period, [this](Nanos t) { store_.EnforceRetention(t); });
}

// ---------------------------------------------------------------------------
// Allocations and traffic

netsim::FlowId Simulation::StartFlow(const netsim::FlowSpec &spec, std::string origin) {
  flow_specs_.emplace_back(spec, std::move(origin));
  return net_->AddFlow(spec);
}

AllocId Simulation::Submit(const allocman::AllocationRequest &req, AllocInfo info) {
  // The listener fires during Submit and may need the info, so it is parked
  // under the id the manager is about to assign.
  const AllocId next = alloc_.next_id();
  alloc_info_[next] = std::move(info);
  allocman::Allocation a;
  try {
    a = alloc_.Submit(req, loop_.now());
  } catch (...) {
    alloc_info_.erase(next);
    throw;
  }
  AllocInfo &stored = alloc_info_[a.id];
  if (stored.traffic && a.state == allocman::AllocState::kQueued && a.selector != allocman::kAnyProductive) {
    // Traffic toward a named system starts right away, before the firewall
    // admits it.
    if (auto s = topo_->FindSystem(a.selector); s && stored.flows.empty()) StartAllocTraffic(a.id, *s);
  }
  return a.id;
}

void Simulation::StartAllocTraffic(AllocId id, SystemIndex s) {
  AllocInfo &info = alloc_info_[id];
  const allocman::Allocation &a = alloc_.allocation(id);
  const auto &fpgas = topo_->systems()[s].fpgas;
  if (fpgas.empty()) return;
  const faults::RandomAllocations defaults;
  const faults::RandomAllocations &r = scenario_.random_allocations ? *scenario_.random_allocations : defaults;
  netsim::FlowSpec up;
  up.name = "alloc" + std::to_string(id) + ".up";
  up.src = topo_->NodeByName(a.node);
  up.dst = fpgas.front();
  up.vlan = Vlan::kExperimentData;
  up.rate_bps = r.rate_bps;
  up.frame_bytes = r.frame_bytes;
  up.start = loop_.now();
  netsim::FlowSpec down = up;
  down.name = "alloc" + std::to_string(id) + ".down";
  std::swap(down.src, down.dst);
  info.flows.push_back(StartFlow(up, "allocation"));
  info.flows.push_back(StartFlow(down, "allocation"));
}

void Simulation::OnAllocRecord(const allocman::AllocLogRecord &r, const allocman::Allocation &a) {
  generations_.emplace_back(r.t, r.generation);
  Emit("allocation", allocman::ToJson(r));
  alloc_seq_.push_back(events_.back().seq);
  if (r.op == "activate") {
    OnActivated(a);
  } else if (r.op == "release" || r.op == "expire" || r.op == "cancel") {
    OnEnded(a);
  }
}

void Simulation::OnActivated(const allocman::Allocation &a) {
  const Nanos now = loop_.now();
  const AllocId id = a.id;
  const SystemIndex s = *a.system;
  loop_.At(now + a.walltime, [this, id]() { alloc_.Expire(id, loop_.now()); });
  auto it = alloc_info_.find(id);
  if (it == alloc_info_.end()) return;
  AllocInfo &info = it->second;
  switch (info.purpose) {
    case Purpose::kWorkload:
      if (info.traffic && info.flows.empty()) StartAllocTraffic(id, s);
      if (info.hold) {
        loop_.At(now + *info.hold, [this, id]() {
          if (alloc_.allocation(id).state == allocman::AllocState::kActive) alloc_.Release(id, loop_.now());
        });
      }
      break;
    case Purpose::kFidelity: {
      const Nanos t_start = now;
      loop_.At(now + scenario_.monitor.fidelity_runtime, [this, id, s, t_start]() {
        if (alloc_.allocation(id).state != allocman::AllocState::kActive) return;
        const double acc = device_.FidelityAccuracy(s, t_start);
        Ingest(store_.Series(topo_->systems()[s].id + ".fidelity.accuracy"), "fidelity.accuracy", loop_.now(), acc);
        ++counters_.fidelity_runs;
        alloc_.Release(id, loop_.now());
        EvaluateAlerts(loop_.now());
      });
      break;
    }
    case Purpose::kHwTest:
      HwTestAllocated(id, info.pipeline, s);
      break;
  }
}

void Simulation::OnEnded(const allocman::Allocation &a) {
  auto it = alloc_info_.find(a.id);
  if (it == alloc_info_.end() || it->second.flows.empty()) return;
  const faults::RandomAllocations defaults;
  const Nanos tail = scenario_.random_allocations ? scenario_.random_allocations->tail : defaults.tail;
  const std::vector<netsim::FlowId> flows = std::move(it->second.flows);
  it->second.flows.clear();
  loop_.At(loop_.now() + tail, [this, flows]() {
    for (netsim::FlowId f : flows) net_->StopFlow(f);
  });
}

void Simulation::OnFrame(const netsim::FrameEvent &e) {
  const bool delivered = e.kind == netsim::FrameEvent::Kind::kDelivered;
  // Rule-set generation in force when the frame met the firewall.
  auto g = std::upper_bound(generations_.begin(), generations_.end(), e.first_hop_time,
                            [](Nanos t, const std::pair<Nanos, std::uint64_t> &x) { return t < x.first; });
  const std::uint64_t generation = g == generations_.begin() ? 0 : std::prev(g)->second;
  const auto key = std::make_tuple(delivered, e.header.src, e.header.dst);
  auto it = open_runs_.find(key);
  if (it != open_runs_.end()) {
    FrameRun &r = frame_runs_[it->second];
    if (r.generation == generation) {
      ++r.count;
      r.hop_min = std::min(r.hop_min, e.first_hop_time);
      r.hop_max = std::max(r.hop_max, e.first_hop_time);
      r.enq_min = std::min(r.enq_min, e.enqueue_time);
      r.enq_max = std::max(r.enq_max, e.enqueue_time);
      return;
    }
  }
  FrameRun r;
  r.delivered = delivered;
  r.src = topo_->node(e.header.src).id;
  r.dst = topo_->node(e.header.dst).id;
  r.generation = generation;
  r.count = 1;
  r.hop_min = r.hop_max = e.first_hop_time;
  r.enq_min = r.enq_max = e.enqueue_time;
  open_runs_[key] = frame_runs_.size();
  frame_runs_.push_back(std::move(r));
}

// ---------------------------------------------------------------------------
// Monitoring

monitor::SeriesId Simulation::SystemSeries(SystemIndex s, const std::string &metric) {
  return store_.Series(topo_->systems()[s].id + "." + metric);
}

void Simulation::Ingest(monitor::SeriesId id, std::string_view metric, Nanos t, double v) {
  store_.Ingest(id, t, v);
  alerts_.Observe(id, store_.series_name(id), metric, t, v);
}

void Simulation::EvaluateAlerts(Nanos t) {
  for (monitor::AlertEvent &e : alerts_.Evaluate(t)) {
    Emit("alert", monitor::ToJson(e));
    alert_log_.push_back(std::move(e));
  }
}

void Simulation::TelemetryTick(Nanos t) {
  if (!net_->node_powered(monitor_host_)) return;
  ++counters_.telemetry_ticks;
  const auto &channels = device::Channels();
  for (SystemIndex s = 0; s < topo_->systems().size(); ++s) {
    if (!device_.telemetry_up(s)) continue;
    device_.Sample(s, t, sample_buf_.data());
    for (int c = 0; c < device::kChannelCount; ++c)
      Ingest(telemetry_series_[s][c], channels[c].name, t, sample_buf_[c]);
  }
  EvaluateAlerts(t);
}

void Simulation::ProbeCycle(Nanos t) {
  if (!net_->node_powered(monitor_host_)) return;
  ++counters_.probe_cycles;
  const Vlan vlan = scenario_.monitor.probe_vlan;
  for (SystemIndex s = 0; s < topo_->systems().size(); ++s) {
    if (alloc_.state(s) == allocman::SystemState::kDrained) continue;
    const topology::System &sys = topo_->systems()[s];
    std::vector<topology::NodeIndex> targets;
    if (vlan == Vlan::kExperimentData) {
      targets = sys.fpgas;
    } else if (sys.controller) {
      targets.push_back(*sys.controller);
    }
    if (targets.empty()) continue;
    struct Cycle {
      int sent = 0;
      int pending = 0;
      int replied = 0;
      Nanos rtt_sum = 0;
    };
    auto cycle = std::make_shared<Cycle>();
    cycle->sent = cycle->pending = static_cast<int>(targets.size()) * 2;  // ICMP echo and ARP per target
    ProbeStats &stats = counters_.probes[topology::VlanIndex(vlan)];
    for (topology::NodeIndex target : targets) {
      for (int k = 0; k < 2; ++k) {
        ++stats.sent;
        net_->SendProbe(monitor_host_, target, vlan, [this, cycle, s, t, &stats](const netsim::ProbeResult &r) {
          if (r.replied) {
            ++cycle->replied;
            cycle->rtt_sum += r.rtt;
            ++stats.replied;
            stats.max_rtt = std::max(stats.max_rtt, r.rtt);
          }
          if (--cycle->pending > 0) return;
          Ingest(SystemSeries(s, "probe.response_ratio"), "probe.response_ratio", t,
                 static_cast<double>(cycle->replied) / cycle->sent);
          if (cycle->replied > 0)
            Ingest(SystemSeries(s, "probe.rtt"), "probe.rtt", t,
                   ToSeconds(cycle->rtt_sum) / static_cast<double>(cycle->replied));
          EvaluateAlerts(loop_.now());
        });
      }
    }
  }
}

HealthRecord Simulation::RunHealthCheck(SystemIndex s, Nanos t) {
  HealthRecord rec;
  rec.t = t;
  rec.system = topo_->systems()[s].id;
  if (alloc_.state(s) == allocman::SystemState::kDrained) {
    rec.skipped = "SystemDrained";
  } else if (alloc_.state(s) == allocman::SystemState::kAllocated) {
    rec.skipped = "SystemOccupied";
  } else if (!device_.telemetry_up(s)) {
    rec.skipped = "ControllerDown";
  } else {
    rec.report = device_.Check(s, t);
    Ingest(SystemSeries(s, "health.sram_ok"), "health.sram_ok", t, rec.report->sram_ok ? 1 : 0);
    Ingest(SystemSeries(s, "health.highspeed_links_ok"), "health.highspeed_links_ok", t,
           rec.report->highspeed_links_ok ? 1 : 0);
    Ingest(SystemSeries(s, "health.asic_supplies_ok"), "health.asic_supplies_ok", t,
           rec.report->asic_supplies_ok ? 1 : 0);
  }
  if (rec.report) {
    ++counters_.health_reports[s];
  } else {
    ++counters_.health_skipped[s];
  }
  Emit("health", rec.report ? HealthJson(*rec.report) : json{{"system", rec.system}, {"skipped", rec.skipped}});
  rec.seq = events_.back().seq;
  health_log_.push_back(rec);
  return rec;
}

void Simulation::HealthSweep(Nanos t) {
  if (!net_->node_powered(monitor_host_)) return;
  for (SystemIndex s = 0; s < topo_->systems().size(); ++s) RunHealthCheck(s, t);
  EvaluateAlerts(t);
}

void Simulation::StartFidelity(Nanos) {
  if (!net_->node_powered(monitor_host_)) return;
  allocman::AllocationRequest req;
  req.user = "fidelity";
  req.node = scenario_.monitor.fidelity_node;
  req.selector = allocman::kAnyProductive;
  req.walltime = scenario_.monitor.fidelity_runtime + 10 * kMinute;
  AllocInfo info;
  info.purpose = Purpose::kFidelity;
  try {
    const AllocId id = Submit(req, info);
    if (alloc_.allocation(id).state == allocman::AllocState::kQueued) ++counters_.fidelity_queued;
  } catch (const Error &e) {
    Emit("error", {{"source", "fidelity"}, {"message", e.what()}});
  }
}

// ---------------------------------------------------------------------------
// CI/CD driver

Nanos Simulation::JobDuration(const std::string &pipeline, cicd::Job job) const {
  const double u = HashUniform(scenario_.seed, Fnv1a64(pipeline), static_cast<std::uint64_t>(job));
  return static_cast<Nanos>(static_cast<double>(scenario_.cicd.durations[static_cast<int>(job)]) * (0.5 + u));
}

cicd::Outcome Simulation::JobOutcome(const std::string &pipeline, cicd::Job job) const {
  auto it = outcomes_.find(pipeline);
  if (it == outcomes_.end()) return cicd::Outcome::kPass;
  auto o = it->second.find(job);
  return o == it->second.end() ? cicd::Outcome::kPass : o->second;
}

void Simulation::OnCiStart(const std::string &pipeline, cicd::Job job, Nanos now) {
  if (job == cicd::Job::kHwTest) {
    loop_.At(now, [this, pipeline]() { HwTestBegin(pipeline); });
    return;
  }
  loop_.At(now + JobDuration(pipeline, job), [this, pipeline, job]() {
    ci_.CompleteJob(pipeline, job, JobOutcome(pipeline, job), loop_.now());
  });
}

void Simulation::HwTestBegin(const std::string &pipeline) {
  const std::string checksum = ci_.pipeline(pipeline).checksum;
  try {
    staging_.Read(checksum);
  } catch (const Error &e) {
    ci_.CompleteJob(pipeline, cicd::Job::kHwTest, cicd::Outcome::kFail, loop_.now(),
                    std::string(ErrorCodeName(e.code())));
    return;
  }
  allocman::AllocationRequest req;
  req.user = scenario_.cicd.hw_user;
  req.node = scenario_.cicd.hw_node;
  req.selector = allocman::kAnyProductive;
  req.walltime = scenario_.cicd.hw_walltime;
  AllocInfo info;
  info.purpose = Purpose::kHwTest;
  info.pipeline = pipeline;
  Submit(req, info);
}

void Simulation::HwTestAllocated(AllocId id, const std::string &pipeline, SystemIndex s) {
  loop_.At(loop_.now() + scenario_.cicd.configure_delay, [this, id, pipeline, s]() {
    const Nanos now = loop_.now();
    if (alloc_.allocation(id).state != allocman::AllocState::kActive) {
      ci_.CompleteJob(pipeline, cicd::Job::kHwTest, cicd::Outcome::kFail, now, "allocation ended");
      return;
    }
    const std::string checksum = ci_.pipeline(pipeline).checksum;
    std::string bitfile;
    try {
      bitfile = staging_.Read(checksum).bitfile_id;
    } catch (const Error &e) {
      alloc_.Release(id, now);
      ci_.CompleteJob(pipeline, cicd::Job::kHwTest, cicd::Outcome::kFail, now, std::string(ErrorCodeName(e.code())));
      return;
    }
    device_.LoadBitfile(s, bitfile);
    ci_.MarkHwTestStart(pipeline, topo_->systems()[s].id, now);
    loop_.At(now + JobDuration(pipeline, cicd::Job::kHwTest), [this, id, pipeline]() {
      if (alloc_.allocation(id).state == allocman::AllocState::kActive) alloc_.Release(id, loop_.now());
      ci_.CompleteJob(pipeline, cicd::Job::kHwTest, JobOutcome(pipeline, cicd::Job::kHwTest), loop_.now());
    });
  });
}

void Simulation::RunCicdEvent(const faults::CicdEvent &e) {
  try {
    switch (e.kind) {
      case faults::CicdEventKind::kSubmit:
        outcomes_[e.changeset.id] = e.outcomes;
        ci_.Submit(e.changeset, loop_.now());
        break;
      case faults::CicdEventKind::kApprove:
        ci_.Approve(e.pipeline, e.approver, loop_.now());
        break;
      case faults::CicdEventKind::kCorruptStaging: {
        const std::string &checksum = ci_.pipeline(e.pipeline).checksum;
        staging_.Corrupt(checksum);
        Emit("staging_corrupted", {{"pipeline", e.pipeline}, {"checksum", checksum}});
        break;
      }
    }
  } catch (const Error &err) {
    Emit("error", {{"source", "cicd"}, {"pipeline", e.pipeline.empty() ? e.changeset.id : e.pipeline},
                   {"message", err.what()}});
  }
}

// ---------------------------------------------------------------------------
// Faults

std::vector<device::ComponentId> Simulation::Components(const std::vector<std::string> &names) const {
  std::vector<device::ComponentId> out;
  for (const std::string &n : names) {
    auto c = device_.FindComponent(n);
    if (!c) throw Error(ErrorCode::kUnknownEntity, n);
    out.push_back(*c);
  }
  return out;
}

void Simulation::CutPower(const std::vector<device::ComponentId> &c) {
  for (device::ComponentId id : device_.Cut(c))
    if (auto n = device_.ComponentNode(id)) net_->SetNodePowered(*n, false);
  TrackControllers();
}

void Simulation::RestorePower(const std::vector<device::ComponentId> &c) {
  for (device::ComponentId id : device_.Restore(c))
    if (auto n = device_.ComponentNode(id)) net_->SetNodePowered(*n, true);
  TrackControllers();
}

void Simulation::TrackControllers() {
  const Nanos now = loop_.now();
  if (const bool up = net_->node_powered(monitor_host_); up != monitor_up_) {
    monitor_up_ = up;
    if (!up) {
      monitor_outages_.emplace_back(now, -1);
    } else {
      monitor_outages_.back().second = now;
    }
  }
  for (SystemIndex s = 0; s < ctrl_up_.size(); ++s) {
    const bool up = device_.telemetry_up(s);
    if (up == ctrl_up_[s]) continue;
    ctrl_up_[s] = up;
    if (!up) {
      ctrl_outages_[s].emplace_back(now, -1);
    } else {
      ctrl_outages_[s].back().second = now;
    }
  }
}

void Simulation::ApplyFault(std::size_t index) {
  if (index >= scenario_.faults.size()) throw Error(ErrorCode::kUnknownEntity, "fault " + std::to_string(index));
  if (fault_state_[index] == FaultState::kApplied)
    throw Error(ErrorCode::kAlreadyApplied, "fault " + std::to_string(index));
  const faults::FaultEvent &f = scenario_.faults[index];
  json entry = {{"fault", index}, {"kind", faults::FaultKindName(f.kind)}, {"target", f.target}, {"action", "apply"}};
  switch (f.kind) {
    case faults::FaultKind::kDosFlood: {
      netsim::FlowSpec spec;
      spec.name = "dos." + std::to_string(index);
      spec.src = topo_->NodeByName(f.target);
      spec.dst = topo_->NodeByName(f.flood_dst);
      spec.vlan = f.vlan;
      spec.mode = f.backlogged ? netsim::FlowMode::kBacklogged : netsim::FlowMode::kConstantRate;
      spec.rate_bps = f.rate_bps;
      spec.frame_bytes = f.frame_bytes;
      spec.start = loop_.now();
      fault_flows_[index] = StartFlow(spec, "fault");
      entry["flow"] = spec.name;
      break;
    }
    case faults::FaultKind::kDrawerPowerFail:
    case faults::FaultKind::kSystemAnalogPowerFail:
    case faults::FaultKind::kSiteOutage: {
      const std::vector<std::string> names = faults::PowerPropagate(*topo_, f);
      fault_components_[index] = Components(names);
      CutPower(fault_components_[index]);
      entry["components"] = names;
      break;
    }
    case faults::FaultKind::kLinkDown: {
      auto l = topo_->FindLink(f.target);
      if (!l) throw Error(ErrorCode::kUnknownEntity, f.target);
      net_->SetLinkUp(*l, false);
      break;
    }
    case faults::FaultKind::kControllerHang: {
      auto s = topo_->FindSystem(f.target);
      if (!s) throw Error(ErrorCode::kUnknownEntity, f.target);
      device_.Hang(*s);
      TrackControllers();
      break;
    }
  }
  fault_state_[index] = FaultState::kApplied;
  entry["t"] = Seconds(loop_.now());
  fault_log_.push_back(entry);
  Emit("fault", entry);
}

void Simulation::RevertFault(std::size_t index) {
  if (index >= scenario_.faults.size()) throw Error(ErrorCode::kUnknownEntity, "fault " + std::to_string(index));
  if (fault_state_[index] != FaultState::kApplied)
    throw Error(ErrorCode::kNotApplied, "fault " + std::to_string(index));
  const faults::FaultEvent &f = scenario_.faults[index];
  json entry = {{"fault", index}, {"kind", faults::FaultKindName(f.kind)}, {"target", f.target}, {"action", "revert"}};
  switch (f.kind) {
    case faults::FaultKind::kDosFlood:
      if (fault_flows_[index]) net_->StopFlow(*fault_flows_[index]);
      fault_flows_[index].reset();
      break;
    case faults::FaultKind::kDrawerPowerFail:
    case faults::FaultKind::kSystemAnalogPowerFail:
      RestorePower(fault_components_[index]);
      break;
    case faults::FaultKind::kSiteOutage: {
      // Components come back one at a time over a minute, in a seeded order.
      std::vector<device::ComponentId> order = fault_components_[index];
      std::shuffle(order.begin(), order.end(), rng_);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<Nanos> offsets(order.size());
      for (Nanos &o : offsets) o = static_cast<Nanos>(unit(rng_) * static_cast<double>(kMinute));
      std::sort(offsets.begin(), offsets.end());
      for (std::size_t i = 0; i < order.size(); ++i) {
        const device::ComponentId c = order[i];
        loop_.At(loop_.now() + offsets[i], [this, c]() { RestorePower({c}); });
      }
      entry["restore_window_s"] = 60;
      break;
    }
    case faults::FaultKind::kLinkDown:
      net_->SetLinkUp(*topo_->FindLink(f.target), true);
      break;
    case faults::FaultKind::kControllerHang:
      device_.Unhang(*topo_->FindSystem(f.target));
      TrackControllers();
      break;
  }
  fault_state_[index] = FaultState::kReverted;
  entry["t"] = Seconds(loop_.now());
  fault_log_.push_back(entry);
  Emit("fault", entry);
}

// ---------------------------------------------------------------------------
// Control plane

namespace {
bool IsIndex(const json &v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }
}  // namespace

json Simulation::Apply(const json &command) {
  if (!command.is_object()) throw Error(ErrorCode::kInvalidArgument, "command must be an object");
  const std::string verb = StringField(command, "verb");
  const Nanos now = loop_.now();
  json result;
  if (verb == "drain" || verb == "undrain") {
    const std::string system = StringField(command, "system");
    const allocman::SystemState st = verb == "drain" ? alloc_.Drain(system, now) : alloc_.Undrain(system, now);
    const auto s = topo_->FindSystem(system);
    result = {{"system", system},
              {"state", allocman::SystemStateName(st)},
              {"drain_pending", alloc_.drain_pending(*s)}};
  } else if (verb == "annotate") {
    monitor::Annotation a;
    a.t0 = SecondsField(command, "t0", now);
    a.t1 = SecondsField(command, "t1", a.t0);
    if (a.t1 < a.t0) throw Error(ErrorCode::kInvalidRange, "annotation ends before it starts");
    a.author = command.value("author", std::string("operator"));
    a.text = StringField(command, "text");
    a.category = monitor::AnnotationCategoryFromName(command.value("category", std::string("Other")));
    a.id = annotations_.Add(a);
    result = monitor::ToJson(a);
    Emit("annotation", result);
  } else if (verb == "allocate") {
    allocman::AllocationRequest req;
    req.user = StringField(command, "user");
    req.node = StringField(command, "node");
    req.selector = command.value("selector", std::string(allocman::kAnyProductive));
    req.walltime = SecondsField(command, "walltime", kHour);
    AllocInfo info;
    if (command.contains("hold")) info.hold = SecondsField(command, "hold", 0);
    info.traffic = command.value("traffic", false);
    result = AllocationJson(alloc_.allocation(Submit(req, info)), *topo_);
  } else if (verb == "release") {
    if (!command.contains("alloc_id") || !IsIndex(command.at("alloc_id")))
      throw Error(ErrorCode::kInvalidArgument, "alloc_id required");
    result = AllocationJson(alloc_.Release(command.at("alloc_id").get<AllocId>(), now), *topo_);
  } else if (verb == "approve") {
    const cicd::Pipeline &p =
        ci_.Approve(StringField(command, "pipeline"), command.value("approver", std::string("operator")), now);
    result = {{"pipeline", p.changeset.id}, {"state", cicd::PipelineStateName(p.state)}};
  } else if (verb == "submit_changeset") {
    cicd::Changeset c;
    c.id = StringField(command, "id");
    c.author = command.value("author", std::string("operator"));
    auto kind = cicd::ChangeKindFromName(command.value("kind", std::string("Both")));
    if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown change kind");
    c.kind = *kind;
    const cicd::Pipeline &p = ci_.Submit(c, now);
    result = {{"pipeline", p.changeset.id}, {"state", cicd::PipelineStateName(p.state)}};
  } else if (verb == "trigger_health_check") {
    const std::string system = StringField(command, "system");
    auto s = topo_->FindSystem(system);
    if (!s) throw Error(ErrorCode::kUnknownSystem, system);
    if (alloc_.state(*s) == allocman::SystemState::kDrained) throw Error(ErrorCode::kSystemDrained, system);
    if (alloc_.state(*s) == allocman::SystemState::kAllocated) throw Error(ErrorCode::kSystemOccupied, system);
    if (!device_.telemetry_up(*s)) throw Error(ErrorCode::kControllerDown, system);
    result = HealthJson(*RunHealthCheck(*s, now).report);
  } else if (verb == "acknowledge") {
    const std::string rule = StringField(command, "rule");
    const std::string series = StringField(command, "series");
    bool found = false;
    for (const auto &f : alerts_.firing()) found |= f.rule == rule && f.series == series;
    if (!found) throw Error(ErrorCode::kUnknownEntity, "no firing alert " + rule + " on " + series);
    const std::string by = command.value("by", std::string("operator"));
    acks_[{rule, series}] = {now, by};
    result = {{"rule", rule}, {"series", series}, {"acknowledged_by", by}};
  } else if (verb == "apply_fault" || verb == "revert_fault") {
    if (!command.contains("fault") || !IsIndex(command.at("fault")))
      throw Error(ErrorCode::kInvalidArgument, "fault index required");
    const std::size_t i = command.at("fault").get<std::size_t>();
    if (verb == "apply_fault") {
      ApplyFault(i);
    } else {
      RevertFault(i);
    }
    result = {{"fault", i}, {"action", verb}};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown verb " + verb);
  }
  Emit("command", {{"verb", verb}, {"result", result}});
  return result;
}

// ---------------------------------------------------------------------------
// Views

json Simulation::FleetSnapshot() const {
  const topology::Topology &topo = *topo_;
  json systems = json::array();
  std::size_t free = 0, allocated = 0, drained = 0;
  const auto firing = alerts_.firing();
  for (SystemIndex s = 0; s < topo.systems().size(); ++s) {
    const topology::System &sys = topo.systems()[s];
    const allocman::SystemState st = alloc_.state(s);
    free += st == allocman::SystemState::kFree;
    allocated += st == allocman::SystemState::kAllocated;
    drained += st == allocman::SystemState::kDrained;
    json j = {{"id", sys.id},
              {"drawer", topo.drawers()[sys.drawer].id},
              {"rack", topo.racks()[topo.drawers()[sys.drawer].rack].id},
              {"productive", sys.productive},
              {"state", allocman::SystemStateName(st)},
              {"drain_pending", alloc_.drain_pending(s)},
              {"controller_powered", device_.controller_powered(s)},
              {"fpgas_powered", device_.fpgas_powered(s)},
              {"analog_ok", device_.analog_ok(s)},
              {"telemetry_up", device_.telemetry_up(s)},
              {"fpga_design_revision", device_.revision(s)}};
    const auto active = alloc_.active_on(s);
    j["allocation"] = active ? AllocationJson(alloc_.allocation(*active), topo) : json(nullptr);
    if (auto id = store_.FindSeries(sys.id + ".probe.response_ratio"))
      if (auto last = store_.Last(*id)) j["probe_response_ratio"] = last->second;
    json alerts = json::array();
    for (const auto &f : firing)
      if (f.series.rfind(sys.id + ".", 0) == 0)
        alerts.push_back({{"rule", f.rule}, {"series", f.series}, {"severity", f.severity}, {"since", Seconds(f.since)}});
    j["alerts"] = alerts;
    systems.push_back(std::move(j));
  }
  json drawers = json::array();
  for (const topology::Drawer &d : topo.drawers()) {
    json ids = json::array();
    for (std::size_t s : d.systems) ids.push_back(topo.systems()[s].id);
    drawers.push_back({{"id", d.id}, {"rack", topo.racks()[d.rack].id}, {"systems", ids}});
  }
  json pipelines = json::array();
  for (const auto &[id, p] : ci_.pipelines()) {
    json jobs = json::object();
    for (int k = 0; k < cicd::kJobCount; ++k) {
      const cicd::JobStatus &js = p.jobs[k];
      if (!js.required) continue;
      jobs[std::string(cicd::JobName(static_cast<cicd::Job>(k)))] = cicd::OutcomeName(js.outcome);
    }
    pipelines.push_back({{"id", id},
                         {"state", cicd::PipelineStateName(p.state)},
                         {"vote", p.vote ? json(*p.vote) : json(nullptr)},
                         {"jobs", jobs}});
  }
  return {{"t", Seconds(loop_.now())},
          {"scenario", scenario_.name},
          {"duration", Seconds(scenario_.duration)},
          {"summary",
           {{"systems", topo.systems().size()}, {"free", free}, {"allocated", allocated}, {"drained", drained}}},
          {"systems", systems},
          {"drawers", drawers},
          {"pipelines", pipelines},
          {"stable_bitfile", ci_.stable_bitfile()},
          {"firewall_generation", alloc_.rules().generation},
          {"queued_allocations", alloc_.queue().size()}};
}

json Simulation::AlertsView() const {
  json firing = json::array();
  for (const auto &f : alerts_.firing()) {
    json j = {{"rule", f.rule}, {"series", f.series}, {"severity", f.severity}, {"since", Seconds(f.since)}};
    auto ack = acks_.find({f.rule, f.series});
    const bool acked = ack != acks_.end() && ack->second.first >= f.since;
    j["acknowledged"] = acked;
    if (acked) j["acknowledged_by"] = ack->second.second;
    firing.push_back(std::move(j));
  }
  json history = json::array();
  for (const auto &e : alert_log_) history.push_back(monitor::ToJson(e));
  return {{"t", Seconds(loop_.now())}, {"firing", firing}, {"history", history}};
}

std::map<std::string, std::string> Simulation::EndpointSystems() const {
  std::map<std::string, std::string> out;
  for (const topology::System &s : topo_->systems())
    for (topology::NodeIndex n : s.fpgas) out[topo_->node(n).id] = s.id;
  return out;
}

std::uint64_t Simulation::SeriesDigest(const std::string &series) const {
  Fnv1a h;
  auto id = store_.FindSeries(series);
  if (!id) return h.digest();
  for (const auto &[t, v] : store_.Raw(*id, 0, loop_.now() + 1)) {
    h.UpdateValue(t);
    h.UpdateValue(v);
  }
  return h.digest();
}

std::uint64_t Simulation::TraceHash() const {
  Fnv1a h;
  h.UpdateValue(loop_.trace_hash());
  h.UpdateValue(loop_.processed());
  for (const StreamEvent &e : events_) h.Update(ToJson(e).dump());
  for (const FrameRun &r : frame_runs_) h.Update(ToJson(r).dump());
  h.UpdateValue(counters_.probe_cycles);
  h.UpdateValue(counters_.telemetry_ticks);
  h.UpdateValue(counters_.fidelity_runs);
  for (const ProbeStats &p : counters_.probes) {
    h.UpdateValue(p.sent);
    h.UpdateValue(p.replied);
    h.UpdateValue(p.max_rtt);
  }
  return h.digest();
}

void Simulation::WriteTrace(const std::string &dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir);

  json meta = {{"scenario", scenario_.name},
               {"seed", scenario_.seed},
               {"duration_ns", scenario_.duration},
               {"end_ns", loop_.now()},
               {"exempt", scenario_.firewall_exempt},
               {"endpoint_systems", EndpointSystems()},
               {"stable_checksum", seeded_checksum_},
               {"hw_user", scenario_.cicd.hw_user},
               {"eda_parallelism", scenario_.cicd.pools.eda_parallelism},
               {"hw_parallelism", scenario_.cicd.pools.hw_parallelism},
               {"trace_hash", ToHex(TraceHash())}};
  std::ofstream(dir + "/meta.json") << meta.dump(2) << '\n';

  std::vector<json> lines;
  const auto &log = alloc_.log();
  for (std::size_t i = 0; i < log.size(); ++i) {
    json j = allocman::ToJson(log[i]);
    j["seq"] = alloc_seq_[i];
    lines.push_back(std::move(j));
  }
  WriteLines(dir + "/alloc_log.ndjson", lines);
  lines.clear();
  for (const auto &r : ci_.log()) lines.push_back(cicd::ToJson(r));
  WriteLines(dir + "/pipeline_log.ndjson", lines);
  lines.clear();
  for (const FrameRun &r : frame_runs_) lines.push_back(ToJson(r));
  WriteLines(dir + "/frames.ndjson", lines);
  lines.clear();
  for (const HealthRecord &r : health_log_) lines.push_back(ToJson(r));
  WriteLines(dir + "/health.ndjson", lines);
  lines.clear();
  for (const auto &a : alert_log_) lines.push_back(monitor::ToJson(a));
  WriteLines(dir + "/alerts.ndjson", lines);
  lines.clear();
  for (const auto &a : annotations_.all()) lines.push_back(monitor::ToJson(a));
  WriteLines(dir + "/annotations.ndjson", lines);
  WriteLines(dir + "/faults.ndjson", fault_log_);
  lines.clear();
  for (const StreamEvent &e : events_) lines.push_back(ToJson(e));
  WriteLines(dir + "/events.ndjson", lines);

  std::ofstream metrics(dir + "/metrics.txt");
  netsim::SimStats stats = net_->Snapshot();
  for (const MetricLine &m : netsim::ExportStats(stats, *topo_)) metrics << FormatMetricLine(m) << '\n';
  const Nanos t = loop_.now();
  metrics << FormatMetricLine({"monitor_probe_cycles", {}, static_cast<double>(counters_.probe_cycles), t}) << '\n';
  metrics << FormatMetricLine({"monitor_telemetry_ticks", {}, static_cast<double>(counters_.telemetry_ticks), t})
          << '\n';
  metrics << FormatMetricLine({"monitor_fidelity_runs", {}, static_cast<double>(counters_.fidelity_runs), t}) << '\n';
  for (SystemIndex s = 0; s < topo_->systems().size(); ++s) {
    const Tags tags = {{"system", topo_->systems()[s].id}};
    metrics << FormatMetricLine({"monitor_health_reports", tags, static_cast<double>(counters_.health_reports[s]), t})
            << '\n';
    const auto id = telemetry_series_[s][0];
    metrics << FormatMetricLine({"monitor_telemetry_samples", tags, static_cast<double>(store_.raw_count(id)), t})
            << '\n';
  }
}

}  // namespace fleetops::sim
