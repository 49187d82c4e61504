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

#include "sim/replay.h"

#include <algorithm>
#include <fstream>
#include <limits>

#include "common/error.h"

namespace fleetops::sim {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxListed = 20;
constexpr Nanos kOpen = std::numeric_limits<Nanos>::max();

std::vector<json> ReadLines(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kParseError, path + ": " + e.what());
    }
  }
  return out;
}

bool Ends(const std::string &op) { return op == "release" || op == "expire" || op == "cancel"; }

struct Window {
  std::string node;
  std::string system;
  Nanos start = 0;
  Nanos end = kOpen;
};

// Activation windows keyed by allocation id.
std::map<allocman::AllocId, Window> Windows(const TraceData &t) {
  std::map<allocman::AllocId, Window> w;
  for (const auto &[seq, r] : t.alloc) {
    if (r.op == "activate") {
      w[r.alloc_id] = Window{r.node, r.system, r.t, kOpen};
    } else if (Ends(r.op)) {
      auto it = w.find(r.alloc_id);
      if (it != w.end()) it->second.end = r.t;
    }
  }
  return w;
}

std::string Secs(Nanos t) { return std::to_string(ToSeconds(t)) + "s"; }

}  // namespace

void ReplayResult::Violation(std::string what) {
  ok = false;
  ++violation_count;
  if (violations.size() < kMaxListed) violations.push_back(std::move(what));
}

json ReplayResult::ToJson() const {
  return {{"name", name}, {"ok", ok}, {"checked", checked}, {"violation_count", violation_count},
          {"violations", violations}};
}

TraceData TraceFromSimulation(const Simulation &sim) {
  TraceData t;
  t.scenario = sim.scenario().name;
  t.seed = sim.scenario().seed;
  t.end = sim.now();
  t.exempt.insert(sim.scenario().firewall_exempt.begin(), sim.scenario().firewall_exempt.end());
  t.endpoint_systems = sim.EndpointSystems();
  t.stable_checksum = sim.seeded_checksum();
  t.hw_user = sim.scenario().cicd.hw_user;
  t.eda_parallelism = sim.scenario().cicd.pools.eda_parallelism;
  t.hw_parallelism = sim.scenario().cicd.pools.hw_parallelism;
  const auto &log = sim.alloc().log();
  for (std::size_t i = 0; i < log.size(); ++i) t.alloc.emplace_back(sim.alloc_seq()[i], log[i]);
  t.pipeline = sim.ci().log();
  t.frames = sim.frame_runs();
  t.health = sim.health_log();
  return t;
}

TraceData LoadTrace(const std::string &dir) {
  TraceData t;
  std::ifstream in(dir + "/meta.json");
  if (!in) throw Error(ErrorCode::kIo, "no meta.json in " + dir);
  json meta;
  try {
    meta = json::parse(in);
    t.scenario = meta.at("scenario").get<std::string>();
    t.seed = meta.at("seed").get<std::uint64_t>();
    t.end = meta.at("end_ns").get<Nanos>();
    for (const auto &e : meta.at("exempt")) t.exempt.insert(e.get<std::string>());
    t.endpoint_systems = meta.at("endpoint_systems").get<std::map<std::string, std::string>>();
    t.stable_checksum = meta.at("stable_checksum").get<std::string>();
    t.hw_user = meta.at("hw_user").get<std::string>();
    t.eda_parallelism = meta.at("eda_parallelism").get<int>();
    t.hw_parallelism = meta.at("hw_parallelism").get<int>();
    for (const json &j : ReadLines(dir + "/alloc_log.ndjson"))
      t.alloc.emplace_back(j.at("seq").get<std::uint64_t>(), allocman::AllocLogRecordFromJson(j));
    for (const json &j : ReadLines(dir + "/pipeline_log.ndjson")) t.pipeline.push_back(cicd::PipelineLogRecordFromJson(j));
    for (const json &j : ReadLines(dir + "/frames.ndjson")) t.frames.push_back(FrameRunFromJson(j));
    for (const json &j : ReadLines(dir + "/health.ndjson")) t.health.push_back(HealthRecordFromJson(j));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParseError, dir + ": " + e.what());
  }
  return t;
}

ReplayResult CheckFirewallSoundness(const TraceData &t) {
  ReplayResult res;
  res.name = "firewall_soundness";
  std::map<std::pair<std::string, std::string>, std::vector<Window>> by_pair;
  for (const auto &[id, w] : Windows(t)) by_pair[{w.node, w.system}].push_back(w);
  for (const FrameRun &r : t.frames) {
    if (!r.delivered) continue;
    if (t.exempt.count(r.src) || t.exempt.count(r.dst)) continue;
    res.checked += r.count;
    auto src_sys = t.endpoint_systems.find(r.src);
    auto dst_sys = t.endpoint_systems.find(r.dst);
    const bool src_fpga = src_sys != t.endpoint_systems.end();
    const bool dst_fpga = dst_sys != t.endpoint_systems.end();
    if (!src_fpga && !dst_fpga) continue;
    if (src_fpga && dst_fpga) {
      res.Violation("endpoint to endpoint delivery " + r.src + " -> " + r.dst);
      continue;
    }
    const std::string &node = src_fpga ? r.dst : r.src;
    const std::string &system = src_fpga ? src_sys->second : dst_sys->second;
    bool covered = false;
    for (const Window &w : by_pair[{node, system}])
      if (w.start <= r.hop_min && r.hop_max <= w.end) covered = true;
    if (!covered)
      res.Violation(std::to_string(r.count) + " frames " + r.src + " -> " + r.dst + " in [" + Secs(r.hop_min) + ", " +
                    Secs(r.hop_max) + "] outside any allocation of " + system + " to " + node);
  }
  return res;
}

ReplayResult CheckFirewallCompleteness(const TraceData &t, Nanos margin) {
  ReplayResult res;
  res.name = "firewall_completeness";
  std::map<std::pair<std::string, std::string>, std::vector<const FrameRun *>> drops;
  for (const FrameRun &r : t.frames) {
    if (r.delivered) continue;
    auto s = t.endpoint_systems.find(r.src);
    auto d = t.endpoint_systems.find(r.dst);
    if (s != t.endpoint_systems.end() && d == t.endpoint_systems.end()) drops[{r.dst, s->second}].push_back(&r);
    if (d != t.endpoint_systems.end() && s == t.endpoint_systems.end()) drops[{r.src, d->second}].push_back(&r);
  }
  for (const auto &[id, w] : Windows(t)) {
    ++res.checked;
    const Nanos lo = w.start + margin;
    const Nanos hi = w.end == kOpen ? kOpen : w.end - margin;
    if (lo > hi) continue;
    for (const FrameRun *r : drops[{w.node, w.system}]) {
      if (r->hop_max < lo || r->hop_min > hi) continue;
      res.Violation(std::to_string(r->count) + " frames " + r->src + " -> " + r->dst + " dropped in [" +
                    Secs(r->hop_min) + ", " + Secs(r->hop_max) + "] during allocation " + std::to_string(id));
    }
  }
  return res;
}

ReplayResult CheckOccupancySafety(const TraceData &t) {
  ReplayResult res;
  res.name = "occupancy_safety";
  struct Item {
    std::uint64_t seq;
    const allocman::AllocLogRecord *alloc;
    const HealthRecord *health;
  };
  std::vector<Item> items;
  for (const auto &[seq, r] : t.alloc) items.push_back({seq, &r, nullptr});
  for (const HealthRecord &h : t.health) items.push_back({h.seq, nullptr, &h});
  std::sort(items.begin(), items.end(), [](const Item &a, const Item &b) { return a.seq < b.seq; });
  std::set<std::string> allocated, drained, pending;
  for (const Item &it : items) {
    if (it.alloc) {
      const allocman::AllocLogRecord &r = *it.alloc;
      if (r.op == "activate") {
        allocated.insert(r.system);
      } else if ((r.op == "release" || r.op == "expire") && !r.system.empty()) {
        allocated.erase(r.system);
        if (pending.erase(r.system)) drained.insert(r.system);
      } else if (r.op == "drain") {
        drained.insert(r.system);
      } else if (r.op == "drain_pending") {
        pending.insert(r.system);
      } else if (r.op == "undrain") {
        drained.erase(r.system);
        pending.erase(r.system);
      }
      continue;
    }
    const HealthRecord &h = *it.health;
    if (!h.report) continue;
    ++res.checked;
    if (allocated.count(h.system)) res.Violation("health check on allocated " + h.system + " at " + Secs(h.t));
    if (drained.count(h.system)) res.Violation("health check on drained " + h.system + " at " + Secs(h.t));
  }
  return res;
}

ReplayResult CheckCiOrdering(const TraceData &t) {
  ReplayResult res;
  res.name = "ci_ordering";
  std::set<std::string> staged = {t.stable_checksum};
  std::map<std::string, bool> bitfile_passed;
  std::map<std::string, bool> needs_bitfile;
  for (const cicd::PipelineLogRecord &r : t.pipeline) {
    if (r.transition == "staged") staged.insert(r.detail);
    if (r.transition == "job_queued" && r.job == "bitfile_build") needs_bitfile[r.pipeline] = true;
    if (r.transition == "job_done" && r.job == "bitfile_build" && r.outcome == "Pass") bitfile_passed[r.pipeline] = true;
    if (r.transition != "hw_test_start") continue;
    ++res.checked;
    if (!staged.count(r.detail))
      res.Violation(r.pipeline + " tested " + r.detail.substr(0, 12) + " before it was staged");
    if (needs_bitfile[r.pipeline] && !bitfile_passed[r.pipeline])
      res.Violation(r.pipeline + " started hw_test before bitfile_build passed");
  }
  return res;
}

ReplayResult CheckPoolIsolation(const TraceData &t) {
  ReplayResult res;
  res.name = "pool_isolation";
  std::map<std::string, int> busy;
  const std::map<std::string, int> cap = {{std::string(cicd::PoolName(cicd::Pool::kHardenedEda)), t.eda_parallelism},
                                          {std::string(cicd::PoolName(cicd::Pool::kHardwareTest)), t.hw_parallelism}};
  for (const cicd::PipelineLogRecord &r : t.pipeline) {
    if (r.transition != "job_start" && r.transition != "job_done") continue;
    auto job = cicd::JobFromName(r.job);
    if (!job) {
      res.Violation("unknown job " + r.job);
      continue;
    }
    const std::string pool(cicd::PoolName(cicd::PoolOf(*job)));
    if (r.transition == "job_done") {
      --busy[pool];
      continue;
    }
    ++res.checked;
    if (r.detail != pool) res.Violation(r.pipeline + "/" + r.job + " ran in " + r.detail);
    if (++busy[pool] > cap.at(pool)) res.Violation(pool + " over capacity at " + Secs(r.t));
  }
  return res;
}

ReplayResult CheckVoteTotality(const TraceData &t) {
  ReplayResult res;
  res.name = "ci_vote_totality";
  struct State {
    int outstanding = 0;
    int votes = 0;
    bool failed = false;
    std::string vote;
  };
  std::map<std::string, State> st;
  for (const cicd::PipelineLogRecord &r : t.pipeline) {
    State &s = st[r.pipeline];
    if (r.transition == "job_queued" && r.job != "release_build") ++s.outstanding;
    if (r.transition == "job_done" && r.job != "release_build") {
      --s.outstanding;
      s.failed |= r.outcome == "Fail";
    }
    if (r.transition == "voted") {
      ++s.votes;
      s.vote = r.outcome;
      if ((r.outcome == "+1") == s.failed) res.Violation(r.pipeline + " voted " + r.outcome + " against its jobs");
    }
  }
  for (const auto &[id, s] : st) {
    ++res.checked;
    if (s.votes > 1) res.Violation(id + " voted " + std::to_string(s.votes) + " times");
    if (s.outstanding == 0 && s.votes == 0) res.Violation(id + " finished its jobs without voting");
  }
  return res;
}

ReplayResult CheckReleaseGate(const TraceData &t) {
  ReplayResult res;
  res.name = "ci_release_gate";
  std::map<std::string, std::string> vote;
  std::set<std::string> approved;
  for (const cicd::PipelineLogRecord &r : t.pipeline) {
    if (r.transition == "voted") vote[r.pipeline] = r.outcome;
    if (r.transition == "approved") {
      ++res.checked;
      if (vote[r.pipeline] != "+1") res.Violation(r.pipeline + " approved without a positive vote");
      approved.insert(r.pipeline);
    }
    if (r.transition == "approve_rejected") {
      ++res.checked;
      if (approved.count(r.pipeline)) res.Violation(r.pipeline + " rejected after approval");
    }
    if (r.transition == "job_start" && r.job == "release_build" && !approved.count(r.pipeline))
      res.Violation(r.pipeline + " started release_build unapproved");
    if (r.transition == "released") {
      ++res.checked;
      if (!approved.count(r.pipeline) || vote[r.pipeline] != "+1")
        res.Violation(r.pipeline + " released without approval");
    }
  }
  return res;
}

ReplayResult CheckAllocHygiene(const TraceData &t) {
  ReplayResult res;
  res.name = "alloc_hygiene";
  std::map<allocman::AllocId, bool> open;
  for (const auto &[seq, r] : t.alloc) {
    if (r.user != t.hw_user) continue;
    if (r.op == "submit") open[r.alloc_id] = true;
    if (Ends(r.op)) open[r.alloc_id] = false;
  }
  for (const auto &[id, o] : open) {
    ++res.checked;
    if (o) res.Violation("allocation " + std::to_string(id) + " of " + t.hw_user + " never ended");
  }
  return res;
}

std::vector<ReplayResult> ReplayAll(const TraceData &t, Nanos margin) {
  return {CheckFirewallSoundness(t), CheckFirewallCompleteness(t, margin),
          CheckOccupancySafety(t),   CheckCiOrdering(t),
          CheckPoolIsolation(t),     CheckVoteTotality(t),
          CheckReleaseGate(t),       CheckAllocHygiene(t)};
}

}  // namespace fleetops::sim
