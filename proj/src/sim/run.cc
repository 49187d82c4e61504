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

#include "sim/run.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <mpfr.h>

#include "common/error.h"
#include "common/hash.h"
#include "netsim/fluid.h"
#include "sim/replay.h"
#include "topology/routing.h"

namespace fleetops::sim {

using nlohmann::json;
using topology::Vlan;

namespace {

double Param(const json &p, const char *key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw Error(ErrorCode::kInvalidConfig, std::string("check parameter ") + key);
  return p.at(key).get<double>();
}

std::string ParamString(const json &p, const char *key) {
  if (!p.contains(key) || !p.at(key).is_string())
    throw Error(ErrorCode::kInvalidConfig, std::string("check parameter ") + key + " missing");
  return p.at(key).get<std::string>();
}

Vlan ParamVlan(const json &p, Vlan fallback) {
  if (!p.contains("vlan")) return fallback;
  auto v = topology::VlanFromNumber(p.at("vlan").get<int>());
  if (!v) throw Error(ErrorCode::kInvalidConfig, "bad vlan in check");
  return *v;
}

std::set<std::string> ParamSet(const json &p, const char *key) {
  std::set<std::string> out;
  if (p.contains(key))
    for (const auto &s : p.at(key)) out.insert(s.get<std::string>());
  return out;
}

// Owning system of a power component name, if any.
std::optional<std::string> ComponentSystem(const topology::Topology &topo, const std::string &name) {
  if (auto n = topo.FindNode(name)) {
    if (auto s = topo.SystemOfNode(*n)) return topo.systems()[*s].id;
    return std::nullopt;
  }
  const auto dot = name.find('.');
  if (dot != std::string::npos && topo.FindSystem(name.substr(0, dot))) return name.substr(0, dot);
  return std::nullopt;
}

CheckVerdict FromReplay(const ReplayResult &r) {
  CheckVerdict v;
  v.pass = r.ok;
  v.measured = {{"violations", r.violation_count}, {"checked", r.checked}};
  v.expected = {{"violations", 0}};
  if (!r.violations.empty()) v.note = r.violations.front();
  return v;
}

// Continuously free: never activated and never drained. Continuously
// allocated: activated at time zero and held to the end.
void OccupancyClasses(const Simulation &sim, std::set<std::size_t> &always_free, std::set<std::size_t> &always_busy) {
  const auto &topo = sim.topology();
  std::set<std::string> touched, held_from_zero, ended;
  for (const auto &r : sim.alloc().log()) {
    if (r.op == "activate" || r.op == "drain" || r.op == "drain_pending") touched.insert(r.system);
    if (r.op == "activate" && r.t == 0) held_from_zero.insert(r.system);
    if ((r.op == "release" || r.op == "expire" || r.op == "drain") && !r.system.empty()) ended.insert(r.system);
  }
  for (std::size_t s = 0; s < topo.systems().size(); ++s) {
    const std::string &id = topo.systems()[s].id;
    if (!touched.count(id)) always_free.insert(s);
    if (held_from_zero.count(id) && !ended.count(id)) always_busy.insert(s);
  }
}

CheckVerdict Cadence(Simulation &sim, const json &p) {
  CheckVerdict v;
  const auto &topo = sim.topology();
  const auto &store = sim.store();
  const Counters &c = sim.counters();
  json measured, expected;
  bool ok = true;

  if (p.contains("telemetry_samples")) {
    const auto want = p.at("telemetry_samples").get<std::uint64_t>();
    std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0;
    std::size_t systems = 0;
    for (std::size_t s = 0; s < topo.systems().size(); ++s) {
      if (!sim.controller_outages()[s].empty()) continue;  // not powered throughout
      ++systems;
      for (const auto &ch : device::Channels()) {
        const auto id = store.FindSeries(topo.systems()[s].id + "." + std::string(ch.name));
        const std::uint64_t n = id ? store.raw_count(*id) : 0;
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
    }
    measured["telemetry_samples"] = {{"min", lo}, {"max", hi}, {"systems", systems}};
    expected["telemetry_samples"] = want;
    ok &= systems > 0 && lo == want && hi == want;
  }
  if (p.contains("probe_cycles")) {
    const auto want = p.at("probe_cycles").get<std::uint64_t>();
    measured["probe_cycles"] = c.probe_cycles;
    expected["probe_cycles"] = want;
    ok &= c.probe_cycles == want;
  }
  std::set<std::size_t> always_free, always_busy;
  OccupancyClasses(sim, always_free, always_busy);
  if (p.contains("health_free")) {
    const auto want = p.at("health_free").get<std::uint64_t>();
    json per = json::object();
    for (std::size_t s : always_free) {
      per[topo.systems()[s].id] = c.health_reports[s];
      ok &= c.health_reports[s] == want;
    }
    ok &= !always_free.empty();
    measured["health_free"] = per;
    expected["health_free"] = want;
  }
  if (p.contains("health_allocated")) {
    const auto want = p.at("health_allocated").get<std::uint64_t>();
    json per = json::object();
    for (std::size_t s : always_busy) {
      per[topo.systems()[s].id] = c.health_reports[s];
      ok &= c.health_reports[s] == want;
    }
    if (p.value("require_allocated", true)) ok &= !always_busy.empty();
    measured["health_allocated"] = per;
    expected["health_allocated"] = want;
  }
  if (p.contains("fidelity_runs")) {
    const auto want = p.at("fidelity_runs").get<std::uint64_t>();
    measured["fidelity_runs"] = c.fidelity_runs;
    expected["fidelity_runs"] = want;
    ok &= c.fidelity_runs == want;
  }
  v.pass = ok;
  v.measured = measured;
  v.expected = expected;
  return v;
}

CheckVerdict FluidShare(Simulation &sim, const json &p) {
  CheckVerdict v;
  const auto &topo = sim.topology();
  const std::string link_id = ParamString(p, "link");
  auto l = topo.FindLink(link_id);
  if (!l) throw Error(ErrorCode::kInvalidConfig, "unknown link " + link_id);
  const topology::Link &link = topo.link(*l);
  const std::string from = ParamString(p, "from");
  const auto from_node = topo.NodeByName(from);
  if (from_node != link.a.node && from_node != link.b.node)
    throw Error(ErrorCode::kInvalidConfig, from + " is not an end of " + link_id);
  const topology::DirectedLink d = topology::Directed(*l, from_node == link.b.node);
  const Vlan vlan = ParamVlan(p, Vlan::kExperimentData);
  const double tolerance = Param(p, "tolerance", 0.05);

  const auto quanta = sim.network().config().Quanta();
  std::vector<double> weights(topology::kVlanCount), demand(topology::kVlanCount, 0.0);
  for (int i = 0; i < topology::kVlanCount; ++i) weights[i] = quanta[i];
  for (const auto &[spec, origin] : sim.flow_specs()) {
    const auto path = topology::ResolvePath(topo, spec.src, spec.dst, spec.vlan);
    if (std::find(path.begin(), path.end(), d) == path.end()) continue;
    double &dm = demand[topology::VlanIndex(spec.vlan)];
    dm = spec.mode == netsim::FlowMode::kBacklogged ? std::numeric_limits<double>::infinity() : dm + spec.rate_bps;
  }
  const auto shares = netsim::WeightedMaxMin(link.capacity_bps, weights, demand);
  const double expected = shares[topology::VlanIndex(vlan)];
  const double measured = sim.network().stats().VlanRate(d, vlan);
  v.measured = {{"bps", measured}, {"link", topo.DirectedName(d)}};
  v.expected = {{"bps", expected}, {"tolerance", tolerance}};
  v.pass = expected > 0 && std::abs(measured - expected) <= tolerance * expected;
  return v;
}

CheckVerdict Independence(Simulation &sim, const json &p) {
  CheckVerdict v;
  const std::set<std::string> affected = ParamSet(p, "systems");
  Simulation reference(WithoutFaults(sim.scenario()));
  reference.RunToEnd();
  std::uint64_t compared = 0, differing = 0;
  std::string first;
  auto skip = [&](const std::string &name) {
    const auto dot = name.find('.');
    return affected.count(name.substr(0, dot)) > 0;
  };
  std::set<std::string> names;
  for (const auto &n : sim.store().SeriesNames()) names.insert(n);
  for (const auto &n : reference.store().SeriesNames()) names.insert(n);
  for (const std::string &n : names) {
    if (skip(n)) continue;
    ++compared;
    if (sim.SeriesDigest(n) != reference.SeriesDigest(n)) {
      ++differing;
      if (first.empty()) first = n;
    }
  }
  v.measured = {{"series_compared", compared}, {"series_differing", differing}};
  v.expected = {{"series_differing", 0}};
  v.pass = compared > 0 && differing == 0;
  if (!first.empty()) v.note = "first differing series " + first;
  return v;
}

CheckVerdict AffectedSystems(Simulation &sim, const json &p) {
  CheckVerdict v;
  const auto &topo = sim.topology();
  const std::size_t fault = static_cast<std::size_t>(Param(p, "fault", 0));
  const std::set<std::string> want = ParamSet(p, "systems");
  std::set<std::string> got;
  bool seen = false;
  for (const json &e : sim.fault_log()) {
    if (e.at("fault").get<std::size_t>() != fault || e.at("action") != "apply") continue;
    seen = true;
    if (e.contains("components"))
      for (const auto &c : e.at("components"))
        if (auto s = ComponentSystem(topo, c.get<std::string>())) got.insert(*s);
  }
  v.measured = {{"systems", got}};
  v.expected = {{"systems", want}};
  v.pass = seen && got == want;
  if (p.value("telemetry", false)) {
    std::set<std::string> gapped;
    for (std::size_t s = 0; s < topo.systems().size(); ++s)
      if (!sim.controller_outages()[s].empty()) gapped.insert(topo.systems()[s].id);
    v.measured["telemetry_gaps"] = gapped;
    v.pass = v.pass && gapped == want;
  }
  return v;
}

CheckVerdict TelemetryGapsExplained(Simulation &sim, const json &p) {
  CheckVerdict v;
  const auto &topo = sim.topology();
  const Nanos period = sim.scenario().monitor.telemetry_period;
  const Nanos last_tick = ((sim.duration() - 1) / period) * period;
  std::uint64_t missing = 0, unexplained = 0;
  for (std::size_t s = 0; s < topo.systems().size(); ++s) {
    const auto id = sim.store().FindSeries(topo.systems()[s].id + ".in_12v");
    std::vector<Nanos> times;
    if (id)
      for (const auto &[t, val] : sim.store().Raw(*id, 0, sim.now() + 1)) times.push_back(t);
    auto down_at = [&](Nanos m) {
      for (const auto *list : {&sim.controller_outages()[s], &sim.monitor_outages()})
        for (const auto &[a, b] : *list)
          if (a <= m && (b < 0 || m < b)) return true;
      return false;
    };
    Nanos prev = -period;
    times.push_back(last_tick + period);
    for (Nanos t : times) {
      for (Nanos m = prev + period; m < t; m += period) {
        ++missing;
        if (!down_at(m)) ++unexplained;
      }
      prev = t;
    }
  }
  (void)p;
  v.measured = {{"missing_samples", missing}, {"unexplained", unexplained}};
  v.expected = {{"unexplained", 0}};
  v.pass = unexplained == 0;
  return v;
}

CheckVerdict PowerRestored(Simulation &sim) {
  CheckVerdict v;
  std::uint64_t down = 0, links = 0, hung = 0;
  for (bool b : sim.device().PowerSnapshot()) down += !b;
  for (topology::LinkIndex l = 0; l < sim.topology().links().size(); ++l) links += !sim.network().link_up(l);
  for (std::size_t s = 0; s < sim.topology().systems().size(); ++s) hung += sim.device().hung(s);
  v.measured = {{"components_down", down}, {"links_down", links}, {"controllers_hung", hung}};
  v.expected = {{"components_down", 0}, {"links_down", 0}, {"controllers_hung", 0}};
  v.pass = down == 0 && links == 0 && hung == 0;
  return v;
}

CheckVerdict ProbeRatio(Simulation &sim, const json &p) {
  CheckVerdict v;
  const std::set<std::string> systems = ParamSet(p, "systems");
  const Nanos t0 = FromSeconds(Param(p, "from", 0));
  const Nanos t1 = FromSeconds(Param(p, "to", ToSeconds(sim.duration())));
  const double lo = Param(p, "min", 0.0), hi = Param(p, "max", 1.0);
  std::uint64_t points = 0, outside = 0;
  for (const std::string &s : systems) {
    auto id = sim.store().FindSeries(s + ".probe.response_ratio");
    if (!id) continue;
    for (const auto &[t, val] : sim.store().Raw(*id, t0, t1)) {
      ++points;
      outside += val < lo || val > hi;
    }
  }
  v.measured = {{"points", points}, {"outside", outside}};
  v.expected = {{"min", lo}, {"max", hi}};
  v.pass = points > 0 && outside == 0;
  return v;
}

// Brute-force aggregation straight from raw points, summed in mpfr at a
// precision wide enough to hold any double sum exactly.
struct OracleBucket {
  std::uint64_t count = 0;
  double min = 0;
  double max = 0;
  mpfr_t sum;
  OracleBucket() {
    mpfr_init2(sum, 4096);
    mpfr_set_zero(sum, 1);
  }
  OracleBucket(const OracleBucket &) = delete;
  ~OracleBucket() { mpfr_clear(sum); }
};

Nanos FloorDiv(Nanos t, Nanos res) { return (t >= 0 ? t / res : -((-t + res - 1) / res)) * res; }

// Last retention pass before `duration` (the pass runs at multiples of the period).
Nanos LastRetentionPass(Nanos duration, Nanos period) { return ((duration - 1) / period) * period; }

std::vector<monitor::Aggregate> OracleQuery(const std::vector<std::pair<Nanos, double>> &raw, Nanos aged_before,
                                            Nanos bucket_res, Nanos t0, Nanos t1, Nanos res) {
  std::map<Nanos, OracleBucket> acc;
  for (const auto &[t, x] : raw) {
    const Nanos key_time = t < aged_before ? FloorDiv(t, bucket_res) : t;
    if (key_time < t0 || key_time >= t1) continue;
    OracleBucket &b = acc[FloorDiv(key_time, res)];
    if (b.count == 0 || x < b.min) b.min = x;
    if (b.count == 0 || x > b.max) b.max = x;
    ++b.count;
    mpfr_add_d(b.sum, b.sum, x, MPFR_RNDN);
  }
  std::vector<monitor::Aggregate> out;
  for (auto &[t, b] : acc) {
    monitor::Aggregate a;
    a.t = t;
    a.count = b.count;
    a.min = b.min;
    a.max = b.max;
    a.sum = mpfr_get_d(b.sum, MPFR_RNDN);
    a.mean = a.sum / static_cast<double>(a.count);
    out.push_back(a);
  }
  return out;
}

bool SameAggregates(const std::vector<monitor::Aggregate> &a, const std::vector<monitor::Aggregate> &b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].count != b[i].count || a[i].min != b[i].min || a[i].max != b[i].max ||
        a[i].sum != b[i].sum || a[i].mean != b[i].mean)
      return false;
  }
  return true;
}

// Telemetry stops at `telemetry_until`; the run then ages it. Every series
// must end up as one-minute buckets only, and queries against both the
// fully aged store and a half-aged one must match the raw oracle.
CheckVerdict Retention(Simulation &sim, const json &p) {
  CheckVerdict v;
  const faults::Scenario &sc = sim.scenario();
  if (!sc.monitor.telemetry_until) throw Error(ErrorCode::kInvalidConfig, "retention check needs telemetry_until");
  const auto &tiers = sc.monitor.tiers;
  if (tiers.size() < 2) throw Error(ErrorCode::kInvalidConfig, "retention check needs an aggregate tier");
  const Nanos until = *sc.monitor.telemetry_until;
  const Nanos bucket_res = tiers[1].resolution;
  const auto expected_buckets = static_cast<std::uint64_t>((until + bucket_res - 1) / bucket_res);

  const monitor::Store &store = sim.store();
  std::uint64_t series = 0, bad_series = 0;
  std::string first_bad;
  for (const std::string &name : store.SeriesNames()) {
    const monitor::SeriesId id = *store.FindSeries(name);
    ++series;
    if (store.raw_count(id) != 0 || store.bucket_count(id, 1) != expected_buckets) {
      ++bad_series;
      if (first_bad.empty())
        first_bad = name + " raw " + std::to_string(store.raw_count(id)) + " buckets " +
                    std::to_string(store.bucket_count(id, 1));
    }
  }

  // Raw history, from a rerun that stops before anything ages.
  faults::Scenario fresh = sc;
  fresh.checks.clear();
  fresh.duration = until;
  Simulation raw_sim(fresh);
  raw_sim.RunToEnd();

  faults::Scenario half = sc;
  half.checks.clear();
  half.duration = FromSeconds(Param(p, "mid_age", 0)) + 1;
  Simulation half_sim(half);
  half_sim.RunToEnd();

  struct Stage {
    const Simulation *sim;
    Nanos aged_before;
  };
  const std::vector<Stage> stages = {
      {&sim, LastRetentionPass(sc.duration, sc.monitor.retention_period) - tiers[0].horizon},
      {&half_sim, LastRetentionPass(half.duration, sc.monitor.retention_period) - tiers[0].horizon}};

  std::uint64_t queries = 0, mismatched = 0;
  for (const auto &name : p.at("series")) {
    const std::string n = name.get<std::string>();
    const auto rid = raw_sim.store().FindSeries(n);
    if (!rid) throw Error(ErrorCode::kUnknownEntity, "series " + n);
    const auto raw = raw_sim.store().Raw(*rid, 0, until);
    for (const Stage &st : stages) {
      const monitor::SeriesId id = *st.sim->store().FindSeries(n);
      for (const auto &q : p.at("queries")) {
        const Nanos t0 = FromSeconds(q.at(0).get<double>());
        const Nanos t1 = FromSeconds(q.at(1).get<double>());
        const Nanos res = FromSeconds(q.at(2).get<double>());
        ++queries;
        if (!SameAggregates(st.sim->store().Query(id, t0, t1, res),
                            OracleQuery(raw, st.aged_before, bucket_res, t0, t1, res))) {
          ++mismatched;
          if (v.note.empty()) v.note = "query mismatch " + n + " " + q.dump();
        }
      }
    }
  }
  if (!first_bad.empty()) v.note = first_bad;
  v.measured = {{"series", series},
                {"series_wrong_shape", bad_series},
                {"buckets_per_series", expected_buckets},
                {"queries", queries},
                {"query_mismatches", mismatched}};
  const auto want_buckets = static_cast<std::uint64_t>(Param(p, "buckets", 0));
  v.expected = {{"buckets_per_series", want_buckets}, {"series_wrong_shape", 0}, {"query_mismatches", 0}};
  v.pass = series > 0 && bad_series == 0 && mismatched == 0 && queries > 0 && expected_buckets == want_buckets;
  return v;
}

// Expected outcome of each scripted pipeline, computed from the job table
// alone: hw_test needs both builds, the vote needs every job to pass.
CheckVerdict CiLattice(Simulation &sim) {
  CheckVerdict v;
  std::set<std::string> approvals;
  for (const auto &e : sim.scenario().cicd_events)
    if (e.kind == faults::CicdEventKind::kApprove) approvals.insert(e.pipeline);
  std::map<std::string, int> hw_starts;
  for (const auto &r : sim.ci().log())
    if (r.transition == "job_start" && r.job == "hw_test") ++hw_starts[r.pipeline];
  std::uint64_t checked = 0;
  json mismatches = json::array();
  for (const auto &e : sim.scenario().cicd_events) {
    if (e.kind != faults::CicdEventKind::kSubmit) continue;
    auto outcome = [&](cicd::Job j) {
      auto it = e.outcomes.find(j);
      return it == e.outcomes.end() ? cicd::Outcome::kPass : it->second;
    };
    const bool rtl = e.changeset.kind != cicd::ChangeKind::kSoftware;
    const bool rtl_ok = !rtl || outcome(cicd::Job::kRtlSim) == cicd::Outcome::kPass;
    const bool bit_ok = !rtl || outcome(cicd::Job::kBitfileBuild) == cicd::Outcome::kPass;
    const bool sw_ok = outcome(cicd::Job::kSwBuild) == cicd::Outcome::kPass;
    const bool hw_runs = bit_ok && sw_ok;
    const bool hw_ok = hw_runs && outcome(cicd::Job::kHwTest) == cicd::Outcome::kPass;
    const int vote = rtl_ok && bit_ok && sw_ok && hw_ok ? 1 : -1;
    const bool released = vote == 1 && approvals.count(e.changeset.id);
    const std::string want = released ? "Released" : "Voted";

    const cicd::Pipeline &pl = sim.ci().pipeline(e.changeset.id);
    ++checked;
    const int starts = hw_starts[e.changeset.id];
    if (cicd::PipelineStateName(pl.state) != want || !pl.vote || *pl.vote != vote || starts != (hw_runs ? 1 : 0)) {
      mismatches.push_back({{"pipeline", e.changeset.id},
                            {"state", cicd::PipelineStateName(pl.state)},
                            {"vote", pl.vote ? json(*pl.vote) : json(nullptr)},
                            {"hw_test_starts", starts},
                            {"expected_state", want},
                            {"expected_vote", vote}});
    }
  }
  v.measured = {{"pipelines", checked}, {"mismatches", mismatches.size()}};
  if (!mismatches.empty()) v.note = mismatches.front().dump();
  v.expected = {{"mismatches", 0}};
  v.pass = checked > 0 && mismatches.empty();
  return v;
}

CheckVerdict NoLeakedAllocations(Simulation &sim, const json &p) {
  CheckVerdict v;
  const std::string user = p.value("user", sim.scenario().cicd.hw_user);
  std::uint64_t open = 0;
  for (const auto &[id, a] : sim.alloc().allocations())
    open += a.user == user &&
            (a.state == allocman::AllocState::kActive || a.state == allocman::AllocState::kQueued);
  v.measured = {{"open", open}};
  v.expected = {{"open", 0}};
  v.pass = open == 0;
  return v;
}

}  // namespace

json ToJson(const CheckVerdict &v) {
  json j = {{"name", v.name}, {"type", v.type}, {"pass", v.pass}, {"measured", v.measured}, {"expected", v.expected}};
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

CheckVerdict EvaluateCheck(Simulation &sim, const faults::CheckDecl &check) {
  const json &p = check.params;
  const std::string &type = check.type;
  CheckVerdict v;
  const netsim::SimStats &stats = sim.network().stats();

  if (type == "flow_throughput") {
    const std::string flow = ParamString(p, "flow");
    const auto id = sim.FlowOf(flow);
    if (!id) throw Error(ErrorCode::kInvalidConfig, "unknown flow " + flow);
    const auto &spec = sim.flow_specs()[*id].first;
    const Nanos t0 = FromSeconds(Param(p, "from", ToSeconds(spec.start)));
    const Nanos t1 = FromSeconds(Param(p, "to", ToSeconds(sim.now())));
    const double frac = Param(p, "min_fraction", 0.99);
    const double got = netsim::MeasureFlow(stats, *id, t0, t1).throughput_bps;
    v.measured = {{"bps", got}};
    v.expected = {{"min_bps", frac * spec.rate_bps}, {"offered_bps", spec.rate_bps}};
    v.pass = got >= frac * spec.rate_bps;
  } else if (type == "all_flows_line_rate") {
    const double frac = Param(p, "min_fraction", 0.98);
    const std::string origin = p.value("origin", std::string("workload"));
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_flow;
    std::size_t n = 0;
    for (netsim::FlowId id = 0; id < sim.flow_specs().size(); ++id) {
      const auto &[spec, o] = sim.flow_specs()[id];
      if (o != origin || spec.mode != netsim::FlowMode::kConstantRate) continue;
      ++n;
      const Nanos t0 = FromSeconds(Param(p, "from", ToSeconds(spec.start)));
      const double got = netsim::MeasureFlow(stats, id, t0, sim.now()).throughput_bps / spec.rate_bps;
      if (got < worst) {
        worst = got;
        worst_flow = spec.name;
      }
    }
    v.measured = {{"flows", n}, {"worst_fraction", n ? worst : 0.0}, {"worst_flow", worst_flow}};
    v.expected = {{"min_fraction", frac}};
    v.pass = n > 0 && worst >= frac;
  } else if (type == "no_oversubscription") {
    std::vector<topology::OfferedLoad> loads;
    for (const auto &[spec, o] : sim.flow_specs())
      if (spec.mode == netsim::FlowMode::kConstantRate) loads.push_back({spec.src, spec.dst, spec.vlan, spec.rate_bps});
    const auto demand = topology::AggregateDemand(sim.topology(), loads);
    json links = json::array();
    for (auto d : demand.oversubscribed) links.push_back(sim.topology().DirectedName(d));
    v.measured = {{"oversubscribed", links}, {"loads", loads.size()}};
    v.expected = {{"oversubscribed", json::array()}};
    v.pass = demand.oversubscribed.empty() && !loads.empty();
  } else if (type == "probe_rtt") {
    const Vlan vlan = ParamVlan(p, Vlan::kSystemMgmt);
    const ProbeStats &ps = sim.counters().probes[topology::VlanIndex(vlan)];
    const double max_ms = Param(p, "max_ms", 10);
    const double min_ratio = Param(p, "min_response_ratio", 1.0);
    const double ratio = ps.sent ? static_cast<double>(ps.replied) / static_cast<double>(ps.sent) : 0.0;
    v.measured = {{"sent", ps.sent}, {"replied", ps.replied}, {"max_rtt_ms", ToSeconds(ps.max_rtt) * 1e3}};
    v.expected = {{"max_rtt_ms", max_ms}, {"min_response_ratio", min_ratio}};
    v.pass = ps.sent > 0 && ToSeconds(ps.max_rtt) * 1e3 < max_ms && ratio >= min_ratio;
  } else if (type == "fluid_share") {
    v = FluidShare(sim, p);
  } else if (type == "cadence") {
    v = Cadence(sim, p);
  } else if (type == "pipeline_state") {
    const std::string id = ParamString(p, "pipeline");
    const cicd::Pipeline &pl = sim.ci().pipeline(id);
    v.measured = {{"state", cicd::PipelineStateName(pl.state)}, {"vote", pl.vote ? json(*pl.vote) : json(nullptr)}};
    v.expected = {{"state", ParamString(p, "state")}};
    v.pass = v.measured["state"] == v.expected["state"];
    if (p.contains("vote")) {
      v.expected["vote"] = p.at("vote");
      v.pass = v.pass && pl.vote && *pl.vote == p.at("vote").get<int>();
    }
  } else if (type == "retention") {
    v = Retention(sim, p);
  } else if (type == "ci_lattice") {
    v = CiLattice(sim);
  } else if (type == "no_leaked_allocations") {
    v = NoLeakedAllocations(sim, p);
  } else if (type == "affected_systems") {
    v = AffectedSystems(sim, p);
  } else if (type == "telemetry_gaps_explained") {
    v = TelemetryGapsExplained(sim, p);
  } else if (type == "power_restored") {
    v = PowerRestored(sim);
  } else if (type == "independence") {
    v = Independence(sim, p);
  } else if (type == "probe_ratio") {
    v = ProbeRatio(sim, p);
  } else if (type == "alert_fired") {
    const std::string rule = ParamString(p, "rule");
    const std::string prefix = p.value("series", std::string());
    std::uint64_t n = 0;
    for (const auto &e : sim.alert_log()) n += e.firing && e.rule == rule && e.series.rfind(prefix, 0) == 0;
    const double lo = Param(p, "min_count", 1), hi = Param(p, "max_count", 1e18);
    v.measured = {{"count", n}};
    v.expected = {{"min_count", lo}, {"max_count", hi}};
    v.pass = n >= lo && n <= hi;
  } else if (type == "allocations") {
    std::uint64_t activations = 0, ends = 0;
    for (const auto &r : sim.alloc().log()) {
      activations += r.op == "activate";
      ends += r.op == "release" || r.op == "expire";
    }
    const double min_events = Param(p, "min_events", 0);
    v.measured = {{"activations", activations}, {"releases", ends}, {"events", activations + ends}};
    v.expected = {{"min_events", min_events}};
    v.pass = activations + ends >= min_events;
  } else {
    const TraceData t = TraceFromSimulation(sim);
    if (type == "firewall_soundness") {
      v = FromReplay(CheckFirewallSoundness(t));
    } else if (type == "firewall_completeness") {
      v = FromReplay(CheckFirewallCompleteness(t, FromSeconds(Param(p, "margin_ms", 1) / 1e3)));
    } else if (type == "occupancy_safety") {
      v = FromReplay(CheckOccupancySafety(t));
    } else if (type == "ci_ordering") {
      v = FromReplay(CheckCiOrdering(t));
    } else if (type == "pool_isolation") {
      v = FromReplay(CheckPoolIsolation(t));
    } else if (type == "ci_vote_totality") {
      v = FromReplay(CheckVoteTotality(t));
    } else if (type == "ci_release_gate") {
      v = FromReplay(CheckReleaseGate(t));
    } else if (type == "alloc_hygiene") {
      v = FromReplay(CheckAllocHygiene(t));
    } else {
      throw Error(ErrorCode::kUnknownCheck, type);
    }
  }
  v.name = check.name.empty() ? type : check.name;
  v.type = type;
  return v;
}

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckVerdict &v) { return v.pass; });
}

json RunReport::ToJson() const {
  json checks_json = json::array();
  for (const auto &c : checks) checks_json.push_back(sim::ToJson(c));
  return {{"scenario", scenario},
          {"seed", seed},
          {"duration_s", fleetops::ToSeconds(duration)},
          {"trace_hash", trace_hash},
          {"events_processed", events_processed},
          {"wall_seconds", wall_seconds},
          {"pass", pass()},
          {"checks", checks_json},
          {"outputs", outputs}};
}

std::string RunReport::ToText() const {
  std::ostringstream out;
  out << "scenario " << scenario << "  seed " << seed << "  simulated " << std::fixed << std::setprecision(3)
      << fleetops::ToSeconds(duration) << " s  wall " << wall_seconds << " s\n" << std::defaultfloat;
  out << "trace " << trace_hash << "  events " << events_processed << "\n";
  std::size_t passed = 0;
  for (const auto &c : checks) {
    passed += c.pass;
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " [" << c.type << "] measured " << c.measured.dump()
        << " expected " << c.expected.dump();
    if (!c.note.empty()) out << " (" << c.note << ")";
    out << "\n";
  }
  out << (pass() ? "OK" : "FAILED") << " " << passed << "/" << checks.size() << " checks\n";
  return out.str();
}

faults::Scenario WithoutFaults(const faults::Scenario &scenario) {
  faults::Scenario s = scenario;
  s.faults.clear();
  s.checks.clear();
  return s;
}

std::optional<std::uint64_t> SeedFromEnvironment() {
  const char *v = std::getenv("FLEETOPS_SEED");
  if (!v || !*v) return std::nullopt;
  char *end = nullptr;
  const unsigned long long seed = std::strtoull(v, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::kInvalidArgument, "FLEETOPS_SEED is not an integer");
  return seed;
}

RunReport RunScenario(const faults::Scenario &input, const RunOptions &options) {
  faults::Scenario scenario = input;
  if (options.seed) scenario.seed = *options.seed;
  const auto start = std::chrono::steady_clock::now();
  std::string staging;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    staging = options.out_dir + "/staging";
  }
  Simulation sim(scenario, staging);
  sim.RunToEnd();

  RunReport report;
  report.scenario = scenario.name;
  report.seed = scenario.seed;
  report.duration = scenario.duration;
  report.trace_hash = ToHex(sim.TraceHash());
  report.events_processed = sim.network().loop().processed();
  for (const auto &c : scenario.checks) report.checks.push_back(EvaluateCheck(sim, c));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!options.out_dir.empty()) {
    sim.WriteTrace(options.out_dir);
    for (const char *f : {"meta.json", "alloc_log.ndjson", "pipeline_log.ndjson", "frames.ndjson", "health.ndjson",
                          "alerts.ndjson", "annotations.ndjson", "faults.ndjson", "events.ndjson", "metrics.txt",
                          "report.json", "report.txt"})
      report.outputs.push_back(options.out_dir + "/" + f);
    std::ofstream(options.out_dir + "/report.json") << report.ToJson().dump(2) << '\n';
    std::ofstream(options.out_dir + "/report.txt") << report.ToText();
  }
  return report;
}

}  // namespace fleetops::sim
