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
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "allocman/allocman.h"
#include "cicd/pipeline.h"
#include "cicd/staging.h"
#include "device/device.h"
#include "faults/scenario.h"
#include "monitor/alerts.h"
#include "monitor/store.h"
#include "netsim/event_loop.h"
#include "netsim/network.h"

namespace fleetops::sim {

using allocman::AllocId;
using allocman::SystemIndex;

/// One record of the sequence-numbered event stream (alerts, allocation and
/// pipeline transitions, annotations, faults, health reports).
struct StreamEvent {
  std::uint64_t seq = 0;
  Nanos t = 0;
  std::string type;
  nlohmann::json data;
};
nlohmann::json ToJson(const StreamEvent &e);

/// Experiment-VLAN frames between one (src, dst) pair under one rule-set
/// generation, either delivered or firewall-dropped, coalesced.
struct FrameRun {
  bool delivered = true;
  std::string src;
  std::string dst;
  std::uint64_t generation = 0;
  std::uint64_t count = 0;
  Nanos hop_min = 0;
  Nanos hop_max = 0;
  Nanos enq_min = 0;
  Nanos enq_max = 0;
};
nlohmann::json ToJson(const FrameRun &r);
FrameRun FrameRunFromJson(const nlohmann::json &j);

struct HealthRecord {
  std::uint64_t seq = 0;
  Nanos t = 0;
  std::string system;
  std::optional<device::HealthReport> report;
  std::string skipped;  // SystemOccupied, SystemDrained or ControllerDown
};
nlohmann::json ToJson(const HealthRecord &r);
HealthRecord HealthRecordFromJson(const nlohmann::json &j);

struct ProbeStats {
  std::uint64_t sent = 0;
  std::uint64_t replied = 0;
  Nanos max_rtt = 0;
};

struct Counters {
  std::uint64_t probe_cycles = 0;
  std::uint64_t telemetry_ticks = 0;
  std::vector<std::uint64_t> health_reports;  // per system
  std::vector<std::uint64_t> health_skipped;  // per system
  std::uint64_t fidelity_runs = 0;
  std::uint64_t fidelity_queued = 0;
  std::array<ProbeStats, topology::kVlanCount> probes;
};

/// One fully wired run of a scenario: the shared event loop drives the
/// network, allocation manager, device model, monitoring cadences, CI/CD
/// engine and fault schedule.
class Simulation {
 public:
  explicit Simulation(faults::Scenario scenario, std::string staging_root = {});
  ~Simulation();
  Simulation(const Simulation &) = delete;
  Simulation &operator=(const Simulation &) = delete;

  const faults::Scenario &scenario() const { return scenario_; }
  const topology::Topology &topology() const { return *topo_; }
  Nanos now() const { return loop_.now(); }
  Nanos duration() const { return scenario_.duration; }
  bool finished() const { return loop_.now() >= scenario_.duration; }

  /// Advances simulated time, never past the scenario duration.
  void RunUntil(Nanos t);
  void RunToEnd() { RunUntil(scenario_.duration); }
  /// Time of the next pending event, if any.
  std::optional<Nanos> next_event_time() const { return loop_.next_time(); }

  /// Control-plane verbs applied at the current simulated time: drain,
  /// undrain, annotate, allocate, release, approve, trigger_health_check,
  /// acknowledge, submit_changeset, apply_fault and revert_fault.
  nlohmann::json Apply(const nlohmann::json &command);

  void ApplyFault(std::size_t index);
  void RevertFault(std::size_t index);

  nlohmann::json FleetSnapshot() const;
  /// Firing alerts with acknowledgement state, plus the transition history.
  nlohmann::json AlertsView() const;
  /// Fingerprint of the processed event trace and every log.
  std::uint64_t TraceHash() const;
  /// Digest of one series' raw points.
  std::uint64_t SeriesDigest(const std::string &series) const;

  netsim::Network &network() { return *net_; }
  const netsim::Network &network() const { return *net_; }
  const allocman::AllocManager &alloc() const { return alloc_; }
  const device::DeviceModel &device() const { return device_; }
  const monitor::Store &store() const { return store_; }
  const monitor::AlertEngine &alerts() const { return alerts_; }
  const monitor::AnnotationLog &annotations() const { return annotations_; }
  const cicd::CiEngine &ci() const { return ci_; }
  const cicd::StagingArea &staging() const { return staging_; }
  /// Checksum of the stable image staged before any pipeline ran.
  const std::string &seeded_checksum() const { return seeded_checksum_; }
  const std::vector<StreamEvent> &events() const { return events_; }
  const std::vector<std::uint64_t> &alloc_seq() const { return alloc_seq_; }
  const std::vector<FrameRun> &frame_runs() const { return frame_runs_; }
  const std::vector<HealthRecord> &health_log() const { return health_log_; }
  const std::vector<monitor::AlertEvent> &alert_log() const { return alert_log_; }
  const std::vector<nlohmann::json> &fault_log() const { return fault_log_; }
  const Counters &counters() const { return counters_; }
  /// Intervals during which a system's controller produced no telemetry
  /// because of power loss or a hang.
  const std::vector<std::vector<std::pair<Nanos, Nanos>>> &controller_outages() const { return ctrl_outages_; }
  /// Intervals during which the central monitor host was unpowered.
  const std::vector<std::pair<Nanos, Nanos>> &monitor_outages() const { return monitor_outages_; }
  /// Node id to system id for every FPGA endpoint.
  std::map<std::string, std::string> EndpointSystems() const;
  std::optional<netsim::FlowId> FlowOf(const std::string &name) const { return net_->FindFlow(name); }
  const std::vector<std::pair<netsim::FlowSpec, std::string>> &flow_specs() const { return flow_specs_; }

  /// Meta, logs and metric exports for offline replay.
  void WriteTrace(const std::string &dir) const;

 private:
  enum class Purpose { kWorkload, kFidelity, kHwTest };
  struct AllocInfo {
    Purpose purpose = Purpose::kWorkload;
    std::optional<Nanos> hold;
    bool traffic = false;
    std::string pipeline;
    std::vector<netsim::FlowId> flows;
  };
  enum class FaultState { kPending, kApplied, kReverted };

  void ScheduleScenario();
  void ScheduleCadences();
  void Periodic(Nanos first, Nanos period, std::function<void(Nanos)> fn, std::optional<Nanos> until = {});

  void Emit(const std::string &type, nlohmann::json data);
  void OnAllocRecord(const allocman::AllocLogRecord &r, const allocman::Allocation &a);
  void OnActivated(const allocman::Allocation &a);
  void OnEnded(const allocman::Allocation &a);
  AllocId Submit(const allocman::AllocationRequest &req, AllocInfo info);
  netsim::FlowId StartFlow(const netsim::FlowSpec &spec, std::string origin);
  void StartAllocTraffic(AllocId id, SystemIndex s);
  void OnFrame(const netsim::FrameEvent &e);

  void TelemetryTick(Nanos t);
  void ProbeCycle(Nanos t);
  void HealthSweep(Nanos t);
  HealthRecord RunHealthCheck(SystemIndex s, Nanos t);
  void StartFidelity(Nanos t);
  void Ingest(monitor::SeriesId id, std::string_view metric, Nanos t, double v);
  void EvaluateAlerts(Nanos t);

  void OnCiStart(const std::string &pipeline, cicd::Job job, Nanos now);
  void HwTestBegin(const std::string &pipeline);
  void HwTestAllocated(AllocId id, const std::string &pipeline, SystemIndex s);
  Nanos JobDuration(const std::string &pipeline, cicd::Job job) const;
  cicd::Outcome JobOutcome(const std::string &pipeline, cicd::Job job) const;
  void RunCicdEvent(const faults::CicdEvent &e);

  void CutPower(const std::vector<device::ComponentId> &c);
  void RestorePower(const std::vector<device::ComponentId> &c);
  void TrackControllers();
  std::vector<device::ComponentId> Components(const std::vector<std::string> &names) const;

  monitor::SeriesId SystemSeries(SystemIndex s, const std::string &metric);

  faults::Scenario scenario_;
  std::shared_ptr<const topology::Topology> topo_;
  netsim::EventLoop loop_;
  std::unique_ptr<netsim::Network> net_;
  allocman::AllocManager alloc_;
  device::DeviceModel device_;
  monitor::Store store_;
  monitor::AlertEngine alerts_;
  monitor::AnnotationLog annotations_;
  cicd::StagingArea staging_;
  cicd::CiEngine ci_;
  std::mt19937_64 rng_;
  std::string seeded_checksum_;

  topology::NodeIndex monitor_host_ = 0;
  std::vector<std::array<monitor::SeriesId, device::kChannelCount>> telemetry_series_;
  std::map<AllocId, AllocInfo> alloc_info_;
  std::map<std::string, std::map<cicd::Job, cicd::Outcome>> outcomes_;
  std::vector<FaultState> fault_state_;
  std::vector<std::vector<device::ComponentId>> fault_components_;
  std::vector<std::optional<netsim::FlowId>> fault_flows_;
  std::vector<bool> ctrl_up_;
  bool monitor_up_ = true;
  std::vector<std::pair<Nanos, Nanos>> monitor_outages_;
  std::vector<std::vector<std::pair<Nanos, Nanos>>> ctrl_outages_;
  std::vector<std::pair<netsim::FlowSpec, std::string>> flow_specs_;

  std::vector<StreamEvent> events_;
  std::vector<std::uint64_t> alloc_seq_;
  std::vector<FrameRun> frame_runs_;
  std::map<std::tuple<bool, topology::NodeIndex, topology::NodeIndex>, std::size_t> open_runs_;
  std::vector<std::pair<Nanos, std::uint64_t>> generations_;
  std::vector<HealthRecord> health_log_;
  std::vector<monitor::AlertEvent> alert_log_;
  std::vector<nlohmann::json> fault_log_;
  std::map<std::pair<std::string, std::string>, std::pair<Nanos, std::string>> acks_;
  Counters counters_;
  std::vector<double> sample_buf_;
};

}  // namespace fleetops::sim
