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

#include <fleetops/fleetops.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

int Report(fo_status st) {
  const std::string name = fo_status_name(st);
  const std::string msg = fo_last_error();
  if (msg.rfind(name + ": ", 0) == 0)
    std::cerr << "error: " << msg << "\n";
  else
    std::cerr << "error: " << name << ": " << msg << "\n";
  return kExitUsage;
}

std::string Take(char *p) {
  std::string s = p ? p : "";
  fo_free(p);
  return s;
}

std::string ReportText(const json &r) {
  std::ostringstream out;
  out << "scenario " << r.at("scenario").get<std::string>() << "  seed " << r.at("seed") << std::fixed
      << std::setprecision(3) << "  simulated " << r.at("duration_s").get<double>() << " s  wall "
      << r.at("wall_seconds").get<double>() << " s\n"
      << std::defaultfloat;
  out << "trace " << r.at("trace_hash").get<std::string>() << "  events " << r.at("events_processed") << "\n";
  std::size_t passed = 0;
  for (const auto &c : r.at("checks")) {
    const bool ok = c.at("pass").get<bool>();
    passed += ok;
    out << (ok ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << " [" << c.at("type").get<std::string>()
        << "] measured " << c.at("measured").dump() << " expected " << c.at("expected").dump();
    if (c.contains("note")) out << " (" << c.at("note").get<std::string>() << ")";
    out << "\n";
  }
  out << (r.at("pass").get<bool>() ? "OK " : "FAILED ") << passed << "/" << r.at("checks").size() << " checks\n";
  for (const auto &o : r.at("outputs")) out << "wrote " << o.get<std::string>() << "\n";
  return out.str();
}

int Validate(const std::string &path, const std::string &format) {
  char *report = nullptr;
  std::size_t n = 0;
  if (fo_status st = fo_topology_validate_file(path.c_str(), &report, &n); st != FO_OK) return Report(st);
  const json r = json::parse(Take(report));
  if (format == "json") {
    std::cout << r.dump(2) << "\n";
  } else {
    for (const auto &v : r.at("violations"))
      std::cout << v.at("kind").get<std::string>() << " " << v.at("subject").get<std::string>() << ": "
                << v.at("message").get<std::string>() << "\n";
    std::cout << r.at("topology").get<std::string>() << ": " << n << " violation" << (n == 1 ? "" : "s") << "\n";
  }
  return n == 0 ? kExitPass : kExitFail;
}

struct RunResult {
  fo_status status = FO_OK;
  std::string error;
  std::string report;
  int passed = 0;
};

RunResult RunOne(const std::string &scenario, std::optional<std::uint64_t> seed, const std::string &out) {
  RunResult r;
  fo_scenario *s = nullptr;
  r.status = fo_scenario_load(scenario.c_str(), &s);
  if (r.status == FO_OK && seed) r.status = fo_scenario_set_seed(s, *seed);
  if (r.status == FO_OK) {
    char *report = nullptr;
    r.status = fo_run(s, out.empty() ? nullptr : out.c_str(), &report, &r.passed);
    r.report = Take(report);
  }
  if (r.status != FO_OK) r.error = std::string(fo_status_name(r.status)) + ": " + fo_last_error();
  fo_scenario_free(s);
  return r;
}

int Run(const std::string &scenario, std::vector<std::uint64_t> seeds, const std::string &out,
        const std::string &format, int jobs) {
  std::vector<std::optional<std::uint64_t>> runs;
  if (seeds.empty()) {
    if (const char *env = std::getenv("FLEETOPS_SEED"); env && *env) {
      char *end = nullptr;
      const auto v = std::strtoull(env, &end, 10);
      if (*end != '\0') {
        std::cerr << "error: FLEETOPS_SEED is not an integer\n";
        return kExitUsage;
      }
      runs.emplace_back(v);
    } else {
      runs.emplace_back(std::nullopt);
    }
  } else {
    for (auto s : seeds) runs.emplace_back(s);
  }
  std::vector<RunResult> results(runs.size());
  std::vector<std::thread> workers;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lk(mu);
        if (next >= runs.size()) return;
        i = next++;
      }
      std::string dir = out;
      if (!dir.empty() && runs.size() > 1) dir += "/seed-" + std::to_string(*runs[i]);
      results[i] = RunOne(scenario, runs[i], dir);
    }
  };
  for (int j = 0; j < std::max(1, jobs); ++j) workers.emplace_back(worker);
  for (auto &w : workers) w.join();

  int code = kExitPass;
  json all = json::array();
  for (const RunResult &r : results) {
    if (r.status != FO_OK) {
      std::cerr << "error: " << r.error << "\n";
      return kExitUsage;
    }
    const json rep = json::parse(r.report);
    if (format == "json") {
      all.push_back(rep);
    } else {
      std::cout << ReportText(rep);
    }
    if (!r.passed) code = kExitFail;
  }
  if (format == "json") std::cout << (all.size() == 1 ? all.front() : all).dump(2) << "\n";
  return code;
}

int Replay(const std::string &dir, const std::string &check, const std::string &format) {
  char *result = nullptr;
  int passed = 0;
  if (fo_status st = fo_replay(dir.c_str(), check.c_str(), &result, &passed); st != FO_OK) return Report(st);
  const json r = json::parse(Take(result));
  if (format == "json") {
    std::cout << r.dump(2) << "\n";
  } else {
    for (const auto &c : r.at("results")) {
      std::cout << (c.at("ok").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << "  checked "
                << c.at("checked") << "  violations " << c.at("violation_count") << "\n";
      for (const auto &v : c.at("violations")) std::cout << "  " << v.get<std::string>() << "\n";
    }
  }
  return passed ? kExitPass : kExitFail;
}

int Serve(const std::string &scenario, const std::string &bind, double pace, const std::string &staging) {
  if (!(pace > 0)) {
    std::cerr << "error: pace must be greater than zero\n";
    return kExitUsage;
  }
  std::string host = bind;
  int port = 8080;
  if (auto colon = bind.rfind(':'); colon != std::string::npos) {
    host = bind.substr(0, colon);
    try {
      port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception &) {
      std::cerr << "error: bad port in " << bind << "\n";
      return kExitUsage;
    }
  }
  fo_scenario *s = nullptr;
  if (fo_status st = fo_scenario_load(scenario.c_str(), &s); st != FO_OK) return Report(st);

  // Signals are taken synchronously on this thread; block them before the
  // server spawns its threads so they inherit the mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  fo_server *server = nullptr;
  fo_status st = fo_server_start(s, host.c_str(), port, pace, staging.empty() ? nullptr : staging.c_str(), &server);
  fo_scenario_free(s);
  if (st != FO_OK) return Report(st);
  std::cerr << "serving " << scenario << " on http://" << host << ":" << fo_server_port(server) << " at " << pace
            << "x\n";
  int sig = 0;
  sigwait(&set, &sig);
  fo_server_stop(server);
  fo_server_free(server);
  return kExitPass;
}

int DumpDefaultFleet(const std::string &out) {
  char *doc = nullptr;
  if (fo_status st = fo_default_fleet_json(&doc); st != FO_OK) return Report(st);
  const std::string text = Take(doc);
  if (out.empty()) {
    std::cout << text << "\n";
    return kExitPass;
  }
  std::ofstream f(out);
  if (!(f << text << "\n")) {
    std::cerr << "error: cannot write " << out << "\n";
    return kExitUsage;
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"fleetops: fleet simulator and control plane"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fo_version());

  std::string format = "text";
  auto add_format = [&](CLI::App *cmd) {
    cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  };

  std::string topo_path;
  auto *validate = app.add_subcommand("validate", "Validate a topology document");
  validate->add_option("topology", topo_path, "Topology JSON file")->required();
  add_format(validate);

  std::string scenario, out;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  auto *run = app.add_subcommand("run", "Run a scenario to completion and evaluate its checks");
  run->add_option("scenario", scenario, "Scenario file or shipped name")->required();
  run->add_option("--seed", seeds, "Seed; repeat or comma-separate for several runs")->delimiter(',');
  run->add_option("--out", out, "Output directory for reports and traces");
  run->add_option("--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);
  add_format(run);

  std::string trace, check;
  auto *replay = app.add_subcommand("replay", "Run an offline check over a trace directory");
  replay->add_option("trace", trace, "Trace directory written by run --out")->required();
  replay->add_option("check", check, "Check name, or all")->required();
  add_format(replay);

  std::string bind = "127.0.0.1:8080", staging;
  double pace = 1.0;
  auto *serve = app.add_subcommand("serve", "Serve the HTTP control plane over a paced simulation");
  serve->add_option("scenario", scenario, "Scenario file or shipped name")->required();
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--pace", pace, "Simulated seconds per wall second");
  serve->add_option("--staging", staging, "Directory mirroring the staging area");

  std::string dump_out;
  auto *dump = app.add_subcommand("dump-default-fleet", "Print the default fleet topology");
  dump->add_option("--out", dump_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (*validate) return Validate(topo_path, format);
  if (*run) return Run(scenario, seeds, out, format, jobs);
  if (*replay) return Replay(trace, check, format);
  if (*serve) return Serve(scenario, bind, pace, staging);
  if (*dump) return DumpDefaultFleet(dump_out);
  return kExitUsage;
}
