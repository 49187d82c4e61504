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

#include "faults/scenario.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "common/error.h"

namespace fleetops::faults {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Ctx {
  const Topology *topo = nullptr;
  Nanos duration = 0;
};

Nanos Seconds(const json &j, const char *key, Nanos fallback) {
  if (!j.contains(key)) return fallback;
  double s = j.at(key).get<double>();
  return FromSeconds(s);
}

Nanos PositiveSeconds(const json &j, const char *key, Nanos fallback) {
  Nanos v = Seconds(j, key, fallback);
  if (v <= 0) throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be positive");
  return v;
}

Nanos At(const json &j, const Ctx &c) {
  Nanos t = Seconds(j, "at", 0);
  if (t < 0 || t > c.duration)
    throw Error(ErrorCode::kOutOfWindow, "event at " + std::to_string(ToSeconds(t)) + " s outside the scenario");
  return t;
}

void NeedNode(const Ctx &c, const std::string &id) {
  if (!c.topo->FindNode(id)) throw Error(ErrorCode::kUnknownEntity, "node " + id);
}

topology::Vlan VlanOf(const json &j, topology::Vlan fallback) {
  if (!j.contains("vlan")) return fallback;
  auto v = topology::VlanFromNumber(j.at("vlan").get<int>());
  if (!v) throw Error(ErrorCode::kParseError, "vlan must be 1..4");
  return *v;
}

cicd::Outcome OutcomeOf(const std::string &s) {
  if (s == "Pass") return cicd::Outcome::kPass;
  if (s == "Fail") return cicd::Outcome::kFail;
  throw Error(ErrorCode::kParseError, "job outcome must be Pass or Fail, got " + s);
}

std::shared_ptr<const Topology> LoadTopologyRef(const json &ref, const std::string &base_dir, json *doc_out) {
  json doc;
  if (ref.is_object()) {
    doc = ref;
  } else {
    std::string name = ref.is_null() ? "default" : ref.get<std::string>();
    if (name == "default") {
      doc = topology::DefaultFleetDocument();
    } else {
      fs::path p = fs::path(base_dir) / name;
      if (!fs::exists(p)) p = fs::path(DataDir()) / "topologies" / name;
      std::ifstream in(p);
      if (!in) throw Error(ErrorCode::kIo, "cannot open topology " + name);
      try {
        doc = json::parse(in);
      } catch (const json::exception &e) {
        throw Error(ErrorCode::kParseError, p.string() + ": " + e.what());
      }
    }
  }
  *doc_out = doc;
  return std::make_shared<const Topology>(Topology::Load(doc));
}

void ParseNet(const json &j, Scenario &s) {
  auto &n = s.net;
  if (j.contains("vlan_shares")) {
    auto v = j.at("vlan_shares").get<std::vector<double>>();
    if (v.size() != topology::kVlanCount) throw Error(ErrorCode::kParseError, "vlan_shares needs 4 entries");
    for (int i = 0; i < topology::kVlanCount; ++i) {
      if (!(v[i] > 0)) throw Error(ErrorCode::kInvalidConfig, "vlan shares must be positive");
      n.vlan_shares[i] = v[i];
    }
  }
  n.quantum_base_bytes = j.value("quantum_base_bytes", n.quantum_base_bytes);
  n.queue_limit_bytes = j.value("queue_limit_bytes", n.queue_limit_bytes);
  n.backlog_depth = j.value("backlog_depth", n.backlog_depth);
  n.record_deliveries = j.value("record_deliveries", n.record_deliveries);
  n.probe_timeout = PositiveSeconds(j, "probe_timeout", n.probe_timeout);
  if (j.contains("link_capacity")) {
    Topology t = *s.topology;
    for (const auto &[link, bps] : j.at("link_capacity").items()) {
      auto l = t.FindLink(link);
      if (!l) throw Error(ErrorCode::kUnknownEntity, "link " + link);
      t = t.WithLinkCapacity(*l, bps.get<double>());
    }
    s.topology = std::make_shared<const Topology>(std::move(t));
  }
}

void ParseMonitor(const json &j, MonitorConfig &m) {
  m.telemetry = j.value("telemetry", m.telemetry);
  m.telemetry_period = PositiveSeconds(j, "telemetry_period", m.telemetry_period);
  if (j.contains("telemetry_until")) m.telemetry_until = PositiveSeconds(j, "telemetry_until", 0);
  m.probes = j.value("probes", m.probes);
  m.probe_period = PositiveSeconds(j, "probe_period", m.probe_period);
  if (j.contains("probe_vlan")) m.probe_vlan = VlanOf(json{{"vlan", j.at("probe_vlan")}}, m.probe_vlan);
  if (m.probe_vlan != topology::Vlan::kExperimentData && m.probe_vlan != topology::Vlan::kSystemMgmt)
    throw Error(ErrorCode::kInvalidConfig, "probe_vlan must be 3 (controllers) or 4 (FPGAs)");
  m.health_checks = j.value("health_checks", m.health_checks);
  m.health_period = PositiveSeconds(j, "health_period", m.health_period);
  m.fidelity = j.value("fidelity", m.fidelity);
  m.fidelity_period = PositiveSeconds(j, "fidelity_period", m.fidelity_period);
  m.fidelity_runtime = PositiveSeconds(j, "fidelity_runtime", m.fidelity_runtime);
  m.fidelity_node = j.value("fidelity_node", m.fidelity_node);
  m.retention_period = PositiveSeconds(j, "retention_period", m.retention_period);
  if (j.contains("tiers")) {
    m.tiers.clear();
    for (const auto &t : j.at("tiers")) m.tiers.push_back({FromSeconds(t.at(0).get<double>()), FromSeconds(t.at(1).get<double>())});
    monitor::Store probe(m.tiers);  // validates
  }
}

void ParseCicd(const json &j, const Ctx &c, CicdConfig &cfg) {
  cfg.pools.eda_parallelism = j.value("eda_parallelism", cfg.pools.eda_parallelism);
  cfg.pools.hw_parallelism = j.value("hw_parallelism", cfg.pools.hw_parallelism);
  if (cfg.pools.eda_parallelism <= 0 || cfg.pools.hw_parallelism <= 0)
    throw Error(ErrorCode::kInvalidConfig, "pool parallelism must be positive");
  if (j.contains("durations")) {
    for (const auto &[name, secs] : j.at("durations").items()) {
      auto job = cicd::JobFromName(name);
      if (!job) throw Error(ErrorCode::kParseError, "unknown job " + name);
      Nanos d = FromSeconds(secs.get<double>());
      if (d <= 0) throw Error(ErrorCode::kInvalidArgument, "job duration must be positive");
      cfg.durations[static_cast<int>(*job)] = d;
    }
  }
  cfg.configure_delay = PositiveSeconds(j, "configure_delay", cfg.configure_delay);
  cfg.hw_walltime = PositiveSeconds(j, "hw_walltime", cfg.hw_walltime);
  cfg.hw_user = j.value("hw_user", cfg.hw_user);
  cfg.hw_node = j.value("hw_node", cfg.hw_node);
  NeedNode(c, cfg.hw_node);
}

FlowDecl ParseFlow(const json &j, const Ctx &c) {
  FlowDecl f;
  f.name = j.at("name").get<std::string>();
  f.src = j.at("src").get<std::string>();
  f.dst = j.at("dst").get<std::string>();
  NeedNode(c, f.src);
  NeedNode(c, f.dst);
  f.vlan = VlanOf(j, f.vlan);
  std::string mode = j.value("mode", "constant");
  if (mode == "backlogged") {
    f.mode = netsim::FlowMode::kBacklogged;
  } else if (mode == "constant") {
    f.rate_bps = j.at("rate_bps").get<double>();
    if (!(f.rate_bps > 0)) throw Error(ErrorCode::kInvalidArgument, "flow " + f.name + ": rate must be positive");
  } else {
    throw Error(ErrorCode::kParseError, "flow mode must be constant or backlogged");
  }
  f.frame_bytes = j.value("frame_bytes", f.frame_bytes);
  f.start = Seconds(j, "start", 0);
  if (f.start < 0 || f.start > c.duration) throw Error(ErrorCode::kOutOfWindow, "flow " + f.name + " start");
  if (j.contains("stop")) {
    f.stop = Seconds(j, "stop", 0);
    if (*f.stop < f.start || *f.stop > c.duration) throw Error(ErrorCode::kOutOfWindow, "flow " + f.name + " stop");
  }
  return f;
}

AllocDecl ParseAlloc(const json &j, const Ctx &c) {
  AllocDecl a;
  a.at = At(j, c);
  a.request.user = j.at("user").get<std::string>();
  a.request.node = j.at("node").get<std::string>();
  NeedNode(c, a.request.node);
  a.request.selector = j.value("selector", std::string(allocman::kAnyProductive));
  if (a.request.selector != allocman::kAnyProductive && !c.topo->FindSystem(a.request.selector))
    throw Error(ErrorCode::kUnknownEntity, "system " + a.request.selector);
  a.request.walltime = PositiveSeconds(j, "walltime", kHour);
  if (j.contains("hold")) a.hold = PositiveSeconds(j, "hold", 0);
  a.traffic = j.value("traffic", false);
  return a;
}

FaultEvent ParseFault(const json &j, const Ctx &c, std::size_t id) {
  FaultEvent e;
  e.id = id;
  e.at = At(j, c);
  if (j.contains("duration")) {
    e.duration = PositiveSeconds(j, "duration", 0);
    if (e.at + *e.duration > c.duration) throw Error(ErrorCode::kOutOfWindow, "fault ends after the scenario");
  }
  auto kind = FaultKindFromName(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kParseError, "unknown fault kind " + j.at("kind").get<std::string>());
  e.kind = *kind;
  auto target = [&](const char *key) {
    std::string v = j.contains(key) ? j.at(key).get<std::string>() : j.value("target", "");
    if (v.empty()) throw Error(ErrorCode::kParseError, std::string(FaultKindName(e.kind)) + " needs " + key);
    return v;
  };
  switch (e.kind) {
    case FaultKind::kDosFlood:
      e.target = target("device");
      NeedNode(c, e.target);
      e.flood_dst = j.at("dst").get<std::string>();
      NeedNode(c, e.flood_dst);
      e.vlan = VlanOf(j, e.vlan);
      e.frame_bytes = j.value("frame_bytes", e.frame_bytes);
      if (j.contains("rate_bps")) {
        e.backlogged = false;
        e.rate_bps = j.at("rate_bps").get<double>();
        if (!(e.rate_bps > 0)) throw Error(ErrorCode::kInvalidArgument, "flood rate must be positive");
      }
      break;
    case FaultKind::kDrawerPowerFail:
      e.target = target("drawer");
      if (!c.topo->FindDrawer(e.target)) throw Error(ErrorCode::kUnknownEntity, "drawer " + e.target);
      break;
    case FaultKind::kSystemAnalogPowerFail:
    case FaultKind::kControllerHang:
      e.target = target("system");
      if (!c.topo->FindSystem(e.target)) throw Error(ErrorCode::kUnknownEntity, "system " + e.target);
      break;
    case FaultKind::kLinkDown:
      e.target = target("link");
      if (!c.topo->FindLink(e.target)) throw Error(ErrorCode::kUnknownEntity, "link " + e.target);
      break;
    case FaultKind::kSiteOutage: break;
  }
  return e;
}

CicdEvent ParseCicdEvent(const json &j, const Ctx &c) {
  CicdEvent e;
  e.at = At(j, c);
  if (j.contains("submit")) {
    const json &s = j.at("submit");
    e.kind = CicdEventKind::kSubmit;
    e.changeset.id = s.at("id").get<std::string>();
    e.changeset.author = s.value("author", "dev");
    auto kind = cicd::ChangeKindFromName(s.value("kind", "Both"));
    if (!kind) throw Error(ErrorCode::kParseError, "changeset kind must be RtlChange, SoftwareChange or Both");
    e.changeset.kind = *kind;
    e.changeset.software_refs = s.value("software_refs", std::vector<std::string>{});
    if (s.contains("outcomes"))
      for (const auto &[job, out] : s.at("outcomes").items()) {
        auto jb = cicd::JobFromName(job);
        if (!jb) throw Error(ErrorCode::kParseError, "unknown job " + job);
        e.outcomes[*jb] = OutcomeOf(out.get<std::string>());
      }
  } else if (j.contains("approve")) {
    e.kind = CicdEventKind::kApprove;
    e.pipeline = j.at("approve").get<std::string>();
    e.approver = j.value("approver", "reviewer");
  } else if (j.contains("corrupt_staging")) {
    e.kind = CicdEventKind::kCorruptStaging;
    e.pipeline = j.at("corrupt_staging").get<std::string>();
  } else {
    throw Error(ErrorCode::kParseError, "cicd event needs submit, approve or corrupt_staging");
  }
  return e;
}

}  // namespace

std::string_view FaultKindName(FaultKind k) {
  switch (k) {
    case FaultKind::kDosFlood: return "DosFlood";
    case FaultKind::kDrawerPowerFail: return "DrawerPowerFail";
    case FaultKind::kSystemAnalogPowerFail: return "SystemAnalogPowerFail";
    case FaultKind::kLinkDown: return "LinkDown";
    case FaultKind::kControllerHang: return "ControllerHang";
    case FaultKind::kSiteOutage: return "SiteOutage";
  }
  return "?";
}

std::optional<FaultKind> FaultKindFromName(std::string_view name) {
  for (FaultKind k : {FaultKind::kDosFlood, FaultKind::kDrawerPowerFail, FaultKind::kSystemAnalogPowerFail,
                      FaultKind::kLinkDown, FaultKind::kControllerHang, FaultKind::kSiteOutage})
    if (FaultKindName(k) == name) return k;
  return std::nullopt;
}

std::vector<std::string> PowerPropagate(const Topology &topo, const FaultEvent &e) {
  std::vector<std::string> out;
  auto add_system = [&](const topology::System &s) {
    for (auto f : s.fpgas) out.push_back(topo.node(f).id);
    if (s.controller) out.push_back(topo.node(*s.controller).id);
  };
  switch (e.kind) {
    case FaultKind::kDrawerPowerFail: {
      auto d = topo.FindDrawer(e.target);
      if (!d) throw Error(ErrorCode::kUnknownEntity, "drawer " + e.target);
      for (auto s : topo.drawers()[*d].systems) add_system(topo.systems()[s]);
      break;
    }
    case FaultKind::kSystemAnalogPowerFail: {
      auto s = topo.FindSystem(e.target);
      if (!s) throw Error(ErrorCode::kUnknownEntity, "system " + e.target);
      out.push_back(topo.systems()[*s].id + ".asic_analog");
      break;
    }
    case FaultKind::kSiteOutage:
      for (const auto &n : topo.nodes()) out.push_back(n.id);
      for (const auto &s : topo.systems()) out.push_back(s.id + ".asic_analog");
      break;
    default: break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string DataDir() {
  if (const char *env = std::getenv("FLEETOPS_DATA_DIR"); env && *env) return env;
#ifdef FLEETOPS_DATA_DIR
  return FLEETOPS_DATA_DIR;
#else
  return "data";
#endif
}

std::string ResolveScenarioPath(const std::string &name_or_path) {
  if (fs::exists(name_or_path) && fs::is_regular_file(name_or_path)) return name_or_path;
  fs::path shipped = fs::path(DataDir()) / "scenarios" / (name_or_path + ".json");
  if (fs::exists(shipped)) return shipped.string();
  throw Error(ErrorCode::kIo, "no scenario file or shipped scenario named " + name_or_path);
}

Scenario LoadScenarioFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return LoadScenario(doc, fs::path(path).parent_path().string());
}

Scenario LoadScenario(const json &doc, const std::string &base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "scenario must be an object");
  try {
    Scenario s;
    s.name = doc.value("name", "unnamed");
    s.topology = LoadTopologyRef(doc.contains("topology") ? doc.at("topology") : json(), base_dir.empty() ? "." : base_dir,
                                 &s.topology_doc);
    s.seed = doc.value("seed", std::uint64_t{1});
    s.duration = PositiveSeconds(doc, "duration", 0);
    Ctx c{s.topology.get(), s.duration};
    const json cfg = doc.value("config", json::object());
    if (cfg.contains("net")) ParseNet(cfg.at("net"), s);
    c.topo = s.topology.get();
    if (cfg.contains("monitor")) ParseMonitor(cfg.at("monitor"), s.monitor);
    if (cfg.contains("cicd")) ParseCicd(cfg.at("cicd"), c, s.cicd);
    if (cfg.contains("firewall")) {
      s.firewall_exempt = cfg.at("firewall").value("exempt", s.firewall_exempt);
      for (const auto &n : s.firewall_exempt) NeedNode(c, n);
    }
    const json wl = doc.value("workload", json::object());
    for (const auto &f : wl.value("flows", json::array())) s.flows.push_back(ParseFlow(f, c));
    for (const auto &a : wl.value("allocations", json::array())) s.allocations.push_back(ParseAlloc(a, c));
    if (wl.contains("random_allocations")) {
      const json &r = wl.at("random_allocations");
      RandomAllocations ra;
      ra.count = r.at("count").get<int>();
      if (ra.count <= 0) throw Error(ErrorCode::kInvalidArgument, "random_allocations.count must be positive");
      ra.span = PositiveSeconds(r, "span", s.duration);
      if (ra.span > s.duration) throw Error(ErrorCode::kOutOfWindow, "random_allocations.span exceeds duration");
      ra.hold_min = PositiveSeconds(r, "hold_min", ra.hold_min);
      ra.hold_max = PositiveSeconds(r, "hold_max", ra.hold_max);
      if (ra.hold_max < ra.hold_min) throw Error(ErrorCode::kInvalidArgument, "hold_max < hold_min");
      ra.rate_bps = r.value("rate_bps", ra.rate_bps);
      ra.frame_bytes = r.value("frame_bytes", ra.frame_bytes);
      ra.tail = PositiveSeconds(r, "tail", ra.tail);
      ra.users = r.value("users", ra.users);
      s.random_allocations = ra;
    }
    std::size_t fid = 0;
    for (const auto &f : doc.value("faults", json::array())) s.faults.push_back(ParseFault(f, c, fid++));
    for (const auto &e : doc.value("cicd", json::array())) s.cicd_events.push_back(ParseCicdEvent(e, c));
    for (const auto &cmd : doc.value("commands", json::array())) {
      CommandDecl d;
      d.at = At(cmd, c);
      d.command = cmd;
      if (!cmd.contains("verb")) throw Error(ErrorCode::kParseError, "command needs a verb");
      s.commands.push_back(d);
    }
    for (const auto &ch : doc.value("checks", json::array())) {
      CheckDecl d;
      d.type = ch.at("type").get<std::string>();
      d.name = ch.value("name", d.type);
      d.params = ch;
      s.checks.push_back(d);
    }
    // Events in time order; stable so equal times keep document order.
    auto by_at = [](const auto &a, const auto &b) { return a.at < b.at; };
    std::stable_sort(s.allocations.begin(), s.allocations.end(), by_at);
    std::stable_sort(s.cicd_events.begin(), s.cicd_events.end(), by_at);
    std::stable_sort(s.commands.begin(), s.commands.end(), by_at);
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParseError, std::string("scenario: ") + e.what());
  }
}

}  // namespace fleetops::faults
