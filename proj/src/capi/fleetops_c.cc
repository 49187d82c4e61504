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

#include "fleetops/fleetops.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "api/server.h"
#include "common/error.h"
#include "common/hash.h"
#include "faults/scenario.h"
#include "sim/replay.h"
#include "sim/run.h"
#include "sim/simulation.h"
#include "topology/validate.h"

using fleetops::Error;
using fleetops::ErrorCode;
using nlohmann::json;

struct fo_scenario {
  fleetops::faults::Scenario scenario;
};

struct fo_sim {
  std::unique_ptr<fleetops::sim::Simulation> sim;
};

struct fo_server {
  std::unique_ptr<fleetops::api::ApiServer> server;
};

namespace {

thread_local std::string g_last_error;

static_assert(static_cast<int>(ErrorCode::kUnknownCheck) + 1 == FO_UNKNOWN_CHECK);

fo_status StatusOf(ErrorCode code) { return static_cast<fo_status>(static_cast<int>(code) + 1); }

template <typename F>
fo_status Wrap(F &&f) {
  try {
    g_last_error.clear();
    f();
    return FO_OK;
  } catch (const Error &e) {
    g_last_error = e.what();
    return StatusOf(e.code());
  } catch (const json::exception &e) {
    g_last_error = e.what();
    return FO_PARSE_ERROR;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return FO_INTERNAL;
  }
}

char *Dup(const std::string &s) {
  char *p = static_cast<char *>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void Need(const void *p, const char *what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

}  // namespace

extern "C" {

FO_API const char *fo_version(void) { return "0.1.0"; }

FO_API const char *fo_status_name(fo_status status) {
  if (status == FO_OK) return "Ok";
  if (status == FO_INTERNAL) return "Internal";
  if (status < FO_OK || status > FO_UNKNOWN_CHECK) return "Unknown";
  return fleetops::ErrorCodeName(static_cast<ErrorCode>(static_cast<int>(status) - 1)).data();
}

FO_API const char *fo_last_error(void) { return g_last_error.c_str(); }

FO_API void fo_free(char *p) { std::free(p); }

FO_API fo_status fo_topology_validate_file(const char *path, char **report_json, size_t *violations) {
  return Wrap([&]() {
    Need(path, "path");
    const auto topo = fleetops::topology::Topology::LoadFile(path);
    const auto found = fleetops::topology::ValidateTopology(topo);
    json list = json::array();
    for (const auto &v : found)
      list.push_back(
          {{"kind", fleetops::topology::ViolationKindName(v.kind)}, {"subject", v.subject}, {"message", v.message}});
    if (violations) *violations = found.size();
    if (report_json) *report_json = Dup(json{{"topology", topo.name()}, {"violations", list}}.dump(2));
  });
}

FO_API fo_status fo_default_fleet_json(char **out_json) {
  return Wrap([&]() {
    Need(out_json, "out_json");
    *out_json = Dup(fleetops::topology::DefaultFleetDocument().dump(2));
  });
}

FO_API fo_status fo_scenario_load(const char *name_or_path, fo_scenario **out) {
  return Wrap([&]() {
    Need(name_or_path, "name_or_path");
    Need(out, "out");
    auto s = std::make_unique<fo_scenario>();
    s->scenario = fleetops::faults::LoadScenarioFile(fleetops::faults::ResolveScenarioPath(name_or_path));
    *out = s.release();
  });
}

FO_API fo_status fo_scenario_load_json(const char *text, const char *base_dir, fo_scenario **out) {
  return Wrap([&]() {
    Need(text, "json");
    Need(out, "out");
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kParseError, e.what());
    }
    auto s = std::make_unique<fo_scenario>();
    s->scenario = fleetops::faults::LoadScenario(doc, base_dir ? base_dir : ".");
    *out = s.release();
  });
}

FO_API fo_status fo_scenario_set_seed(fo_scenario *s, uint64_t seed) {
  return Wrap([&]() {
    Need(s, "scenario");
    s->scenario.seed = seed;
  });
}

FO_API uint64_t fo_scenario_seed(const fo_scenario *s) { return s ? s->scenario.seed : 0; }

FO_API void fo_scenario_free(fo_scenario *s) { delete s; }

FO_API fo_status fo_run(const fo_scenario *s, const char *out_dir, char **report_json, int *passed) {
  return Wrap([&]() {
    Need(s, "scenario");
    fleetops::sim::RunOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    const auto report = fleetops::sim::RunScenario(s->scenario, opt);
    if (passed) *passed = report.pass() ? 1 : 0;
    if (report_json) *report_json = Dup(report.ToJson().dump(2));
  });
}

FO_API fo_status fo_replay_checks(char **out_json) {
  return Wrap([&]() {
    Need(out_json, "out_json");
    json names = json::array({"all"});
    for (const auto &r : fleetops::sim::ReplayAll(fleetops::sim::TraceData{})) names.push_back(r.name);
    *out_json = Dup(names.dump());
  });
}

FO_API fo_status fo_replay(const char *trace_dir, const char *check, char **result_json, int *passed) {
  return Wrap([&]() {
    Need(trace_dir, "trace_dir");
    Need(check, "check");
    std::string name = check;
    for (char &c : name)
      if (c == '-') c = '_';
    // Validate the name before touching the logs.
    bool known = name == "all";
    for (const auto &r : fleetops::sim::ReplayAll(fleetops::sim::TraceData{})) known |= r.name == name;
    if (!known) throw Error(ErrorCode::kUnknownCheck, check);
    const auto trace = fleetops::sim::LoadTrace(trace_dir);
    json results = json::array();
    bool ok = true;
    for (const auto &r : fleetops::sim::ReplayAll(trace)) {
      if (name != "all" && r.name != name) continue;
      ok &= r.ok;
      results.push_back(r.ToJson());
    }
    if (passed) *passed = ok ? 1 : 0;
    if (result_json) *result_json = Dup(json{{"trace", trace_dir}, {"pass", ok}, {"results", results}}.dump(2));
  });
}

FO_API fo_status fo_sim_create(const fo_scenario *s, const char *staging_dir, fo_sim **out) {
  return Wrap([&]() {
    Need(s, "scenario");
    Need(out, "out");
    auto h = std::make_unique<fo_sim>();
    h->sim = std::make_unique<fleetops::sim::Simulation>(s->scenario, staging_dir ? staging_dir : "");
    *out = h.release();
  });
}

FO_API void fo_sim_free(fo_sim *sim) { delete sim; }

FO_API fo_status fo_sim_run_until(fo_sim *sim, double t) {
  return Wrap([&]() {
    Need(sim, "sim");
    if (!(t >= 0)) throw Error(ErrorCode::kInvalidArgument, "time must be non-negative");
    sim->sim->RunUntil(fleetops::FromSeconds(t));
  });
}

FO_API double fo_sim_now(const fo_sim *sim) { return sim ? fleetops::ToSeconds(sim->sim->now()) : 0.0; }

FO_API fo_status fo_sim_command(fo_sim *sim, const char *command_json, char **result_json) {
  return Wrap([&]() {
    Need(sim, "sim");
    Need(command_json, "command");
    json cmd;
    try {
      cmd = json::parse(command_json);
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kParseError, e.what());
    }
    json r = sim->sim->Apply(cmd);
    if (result_json)
      *result_json = Dup(json{{"applied_t", fleetops::ToSeconds(sim->sim->now())}, {"result", r}}.dump());
  });
}

FO_API fo_status fo_sim_snapshot(const fo_sim *sim, char **out_json) {
  return Wrap([&]() {
    Need(sim, "sim");
    Need(out_json, "out_json");
    *out_json = Dup(sim->sim->FleetSnapshot().dump());
  });
}

FO_API fo_status fo_sim_trace_hash(const fo_sim *sim, uint64_t *out) {
  return Wrap([&]() {
    Need(sim, "sim");
    Need(out, "out");
    *out = sim->sim->TraceHash();
  });
}

FO_API fo_status fo_server_start(const fo_scenario *s, const char *host, int port, double pace,
                                 const char *staging_dir, fo_server **out) {
  return Wrap([&]() {
    Need(s, "scenario");
    Need(out, "out");
    if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidArgument, "port out of range");
    fleetops::api::ServeOptions opt;
    if (host) opt.host = host;
    opt.port = port;
    opt.pace = pace;
    if (staging_dir) opt.staging_dir = staging_dir;
    auto h = std::make_unique<fo_server>();
    h->server = std::make_unique<fleetops::api::ApiServer>(s->scenario, opt);
    h->server->Start();
    *out = h.release();
  });
}

FO_API int fo_server_port(const fo_server *server) { return server ? server->server->port() : -1; }

FO_API void fo_server_wait(fo_server *server) {
  if (server) server->server->Wait();
}

FO_API void fo_server_stop(fo_server *server) {
  if (server) server->server->Stop();
}

FO_API void fo_server_free(fo_server *server) { delete server; }

}  // extern "C"
