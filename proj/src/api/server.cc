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

#include "api/server.h"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "common/error.h"
#include "common/hash.h"

namespace fleetops::api {

using nlohmann::json;

namespace {

constexpr const char *kJson = "application/json";
constexpr const char *kNdjson = "application/x-ndjson";

void SendJson(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void SendError(httplib::Response &res, ErrorCode code, const std::string &message) {
  SendJson(res, {{"error", ErrorCodeName(code)}, {"message", message}}, HttpStatus(code));
}

// Runs a handler, turning library errors into their HTTP form.
template <typename F>
void Guard(httplib::Response &res, F &&f) {
  try {
    f();
  } catch (const Error &e) {
    SendError(res, e.code(), e.what());
  } catch (const json::exception &e) {
    SendError(res, ErrorCode::kParseError, e.what());
  } catch (const std::exception &e) {
    res.status = 500;
    res.set_content(json{{"error", "Internal"}, {"message", e.what()}}.dump(), kJson);
  }
}

json Body(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be an object");
  return j;
}

double QuerySeconds(const httplib::Request &req, const char *key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  char *end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(d))
    throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be a number");
  return d;
}

std::uint64_t QueryU64(const httplib::Request &req, const char *key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  char *end = nullptr;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be an integer");
  return n;
}

json AggregatesJson(const std::vector<monitor::Aggregate> &aggs) {
  json out = json::array();
  for (const auto &a : aggs)
    out.push_back({{"t", ToSeconds(a.t)}, {"count", a.count}, {"min", a.min}, {"max", a.max}, {"mean", a.mean}});
  return out;
}

}  // namespace

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidRange:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kParseError:
    case ErrorCode::kNonMonotonicSample:
      return 400;
    case ErrorCode::kUnknownSystem:
    case ErrorCode::kUnknownAllocation:
    case ErrorCode::kUnknownPipeline:
    case ErrorCode::kUnknownEntity:
    case ErrorCode::kUnknownFlow:
    case ErrorCode::kUnknownCheck:
      return 404;
    case ErrorCode::kOutOfRetention:
      return 410;
    case ErrorCode::kSystemDrained:
    case ErrorCode::kNotActive:
    case ErrorCode::kNotDrained:
    case ErrorCode::kControllerDown:
    case ErrorCode::kSystemOccupied:
    case ErrorCode::kNoFreeSystem:
    case ErrorCode::kDuplicateChangeset:
    case ErrorCode::kJobNotPending:
    case ErrorCode::kNotVotedPositive:
    case ErrorCode::kAlreadyApplied:
    case ErrorCode::kNotApplied:
    case ErrorCode::kStagingMissing:
    case ErrorCode::kChecksumMismatch:
      return 409;
    default:
      return 500;
  }
}

ApiServer::ApiServer(faults::Scenario scenario, ServeOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)) {
  if (!(options_.pace > 0) || !std::isfinite(options_.pace))
    throw Error(ErrorCode::kInvalidArgument, "pace must be a positive number");
  if (options_.tick_ms <= 0) throw Error(ErrorCode::kInvalidArgument, "tick must be positive");
  sim_ = std::make_unique<sim::Simulation>(scenario_, options_.staging_dir);
  Publish();
}

ApiServer::~ApiServer() { Stop(); }

void ApiServer::Start() {
  if (running_) return;
  http_ = std::make_unique<httplib::Server>();
  // httplib also sets SO_REUSEPORT, which would let a second server share the port.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void *>(&yes), sizeof(yes));
  });
  Routes();
  if (options_.port == 0) {
    port_ = http_->bind_to_any_port(options_.host);
    if (port_ < 0) throw Error(ErrorCode::kBindFailure, options_.host);
  } else {
    if (!http_->bind_to_port(options_.host, options_.port))
      throw Error(ErrorCode::kBindFailure, options_.host + ":" + std::to_string(options_.port));
    port_ = options_.port;
  }
  stop_ = false;
  running_ = true;
  sim_thread_ = std::thread([this]() { SimLoop(); });
  http_thread_ = std::thread([this]() { http_->listen_after_bind(); });
  // stop() is a no-op until the listener is up.
  http_->wait_until_ready();
}

void ApiServer::Stop() {
  if (!running_) return;
  {
    std::lock_guard<std::mutex> lk(task_mu_);
    stop_ = true;
  }
  task_cv_.notify_all();
  pub_cv_.notify_all();
  http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (sim_thread_.joinable()) sim_thread_.join();
  {
    std::lock_guard<std::mutex> lk(wait_mu_);
    running_ = false;
  }
  wait_cv_.notify_all();
}

void ApiServer::Wait() {
  std::unique_lock<std::mutex> lk(wait_mu_);
  wait_cv_.wait(lk, [this]() { return !running_; });
}

void ApiServer::SimLoop() {
  using Clock = std::chrono::steady_clock;
  const auto wall0 = Clock::now();
  const Nanos sim0 = sim_->now();
  const auto tick = std::chrono::milliseconds(options_.tick_ms);
  const Nanos step = std::max<Nanos>(1, FromSeconds(options_.pace * options_.tick_ms / 1000.0));
  while (true) {
    {
      std::lock_guard<std::mutex> lk(task_mu_);
      if (stop_) break;
    }
    DrainTasks();
    const double elapsed = std::chrono::duration<double>(Clock::now() - wall0).count();
    const Nanos target = std::min(sim_->duration(), sim0 + FromSeconds(elapsed * options_.pace));
    if (sim_->now() < target) {
      sim_->RunUntil(std::min(target, sim_->now() + step));
      Publish();
      continue;
    }
    std::unique_lock<std::mutex> lk(task_mu_);
    task_cv_.wait_for(lk, tick, [this]() { return stop_ || !tasks_.empty(); });
  }
  // Anything still queued fails rather than hanging its caller.
  std::lock_guard<std::mutex> lk(task_mu_);
  for (auto &t : tasks_)
    t->done.set_exception(std::make_exception_ptr(Error(ErrorCode::kInvalidArgument, "server stopped")));
  tasks_.clear();
}

void ApiServer::DrainTasks() {
  while (true) {
    std::shared_ptr<Task> task;
    {
      std::lock_guard<std::mutex> lk(task_mu_);
      if (tasks_.empty()) return;
      task = tasks_.front();
      tasks_.pop_front();
    }
    try {
      json r = task->fn(*sim_);
      Publish();
      task->done.set_value(std::move(r));
    } catch (...) {
      task->done.set_exception(std::current_exception());
    }
  }
}

void ApiServer::Publish() {
  auto fleet = std::make_shared<const std::string>(sim_->FleetSnapshot().dump());
  auto alerts = std::make_shared<const std::string>(sim_->AlertsView().dump());
  const auto &events = sim_->events();
  std::vector<std::string> fresh;
  for (std::size_t i = published_events_; i < events.size(); ++i) fresh.push_back(sim::ToJson(events[i]).dump());
  published_events_ = events.size();
  {
    std::lock_guard<std::mutex> lk(pub_mu_);
    fleet_ = std::move(fleet);
    alerts_ = std::move(alerts);
    for (auto &e : fresh) events_.push_back(std::move(e));
  }
  if (!fresh.empty()) pub_cv_.notify_all();
}

json ApiServer::Submit(std::function<json(sim::Simulation &)> fn) {
  auto task = std::make_shared<Task>();
  task->fn = std::move(fn);
  auto fut = task->done.get_future();
  {
    std::lock_guard<std::mutex> lk(task_mu_);
    if (!running_ || stop_) throw Error(ErrorCode::kInvalidArgument, "server is not running");
    tasks_.push_back(task);
  }
  task_cv_.notify_all();
  return fut.get();
}

json ApiServer::Command(const json &command) {
  return Submit([command](sim::Simulation &sim) {
    json result = sim.Apply(command);
    return json{{"applied_t", ToSeconds(sim.now())}, {"result", std::move(result)}};
  });
}

json ApiServer::Read(std::function<json(const sim::Simulation &)> fn) {
  return Submit([fn = std::move(fn)](sim::Simulation &sim) { return fn(sim); });
}

std::string ApiServer::FleetJson() const {
  std::lock_guard<std::mutex> lk(pub_mu_);
  return *fleet_;
}

std::string ApiServer::AlertsJson() const {
  std::lock_guard<std::mutex> lk(pub_mu_);
  return *alerts_;
}

std::vector<std::string> ApiServer::EventsSince(std::uint64_t since) const {
  std::lock_guard<std::mutex> lk(pub_mu_);
  // seq is 1-based and dense, so record seq lives at index seq - 1.
  if (since >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(since), events_.end()};
}

bool ApiServer::WaitForEvents(std::uint64_t since, int timeout_ms) const {
  std::unique_lock<std::mutex> lk(pub_mu_);
  return pub_cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
                          [&]() { return events_.size() > since || stop_; }) &&
         events_.size() > since;
}

void ApiServer::Routes() {
  httplib::Server &s = *http_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
  s.Options(".*", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });

  s.Get("/healthz", [](const httplib::Request &, httplib::Response &res) { SendJson(res, {{"ok", true}}); });

  s.Get("/fleet", [this](const httplib::Request &, httplib::Response &res) { res.set_content(FleetJson(), kJson); });

  s.Get("/alerts", [this](const httplib::Request &, httplib::Response &res) { res.set_content(AlertsJson(), kJson); });

  s.Get("/status", [this](const httplib::Request &, httplib::Response &res) {
    Guard(res, [&]() {
      SendJson(res, Read([](const sim::Simulation &sim) {
                 return json{{"t", ToSeconds(sim.now())},
                             {"duration", ToSeconds(sim.duration())},
                             {"finished", sim.finished()},
                             {"events", sim.events().size()},
                             {"trace_hash", ToHex(sim.TraceHash())}};
               }));
    });
  });

  s.Get("/pipelines", [this](const httplib::Request &, httplib::Response &res) {
    Guard(res, [&]() { SendJson(res, json::parse(FleetJson()).at("pipelines")); });
  });

  s.Get(R"(/systems/([^/]+)/metrics)", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      const std::string system = req.matches[1];
      const std::string series = req.has_param("series") ? req.get_param_value("series") : std::string();
      const bool has_from = req.has_param("from");
      const double from = QuerySeconds(req, "from", 0), to = QuerySeconds(req, "to", -1);
      const double resolution = QuerySeconds(req, "res", 0);
      SendJson(res, Read([=](const sim::Simulation &sim) {
                 if (!sim.topology().FindSystem(system)) throw Error(ErrorCode::kUnknownSystem, system);
                 const monitor::Store &store = sim.store();
                 if (series.empty()) {
                   json names = json::array();
                   for (const auto &n : store.SeriesNames(system + ".")) names.push_back(n.substr(system.size() + 1));
                   return json{{"system", system}, {"series", names}};
                 }
                 const auto id = store.FindSeries(system + "." + series);
                 if (!id) throw Error(ErrorCode::kUnknownEntity, "series " + system + "." + series);
                 const Nanos t1 = to < 0 ? sim.now() + 1 : FromSeconds(to);
                 const Nanos t0 = has_from ? FromSeconds(from) : std::max<Nanos>(0, t1 - kHour);
                 json out = {{"system", system}, {"series", series}, {"from", ToSeconds(t0)}, {"to", ToSeconds(t1)}};
                 if (resolution > 0) {
                   out["res"] = resolution;
                   out["aggregates"] = AggregatesJson(store.Query(*id, t0, t1, FromSeconds(resolution)));
                 } else {
                   json points = json::array();
                   for (const auto &[t, v] : store.Raw(*id, t0, t1)) points.push_back({ToSeconds(t), v});
                   out["points"] = points;
                 }
                 return out;
               }));
    });
  });

  s.Get("/annotations", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      const bool ranged = req.has_param("from") || req.has_param("to");
      const Nanos t0 = FromSeconds(QuerySeconds(req, "from", 0));
      const double to = QuerySeconds(req, "to", -1);
      SendJson(res, Read([=](const sim::Simulation &sim) {
                 json out = json::array();
                 const Nanos t1 = to < 0 ? sim.now() : FromSeconds(to);
                 if (ranged && t1 < t0) throw Error(ErrorCode::kInvalidRange, "to before from");
                 const auto items = ranged ? sim.annotations().Query(t0, t1) : sim.annotations().all();
                 for (const auto &a : items) out.push_back(monitor::ToJson(a));
                 return out;
               }));
    });
  });

  auto command = [this](httplib::Response &res, json cmd) {
    json r = Command(cmd);
    const bool pending = r["result"].is_object() && r["result"].value("drain_pending", false);
    SendJson(res, r, pending ? 202 : 200);
  };

  for (const char *verb : {"drain", "undrain"}) {
    s.Post(std::string(R"(/systems/([^/]+)/)") + verb, [command, verb](const httplib::Request &req, httplib::Response &res) {
      Guard(res, [&]() { command(res, {{"verb", verb}, {"system", std::string(req.matches[1])}}); });
    });
  }
  s.Post(R"(/systems/([^/]+)/health_check)", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() { command(res, {{"verb", "trigger_health_check"}, {"system", std::string(req.matches[1])}}); });
  });
  s.Post("/annotations", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      json body = Body(req);
      body["verb"] = "annotate";
      command(res, body);
    });
  });
  s.Post("/allocations", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      json body = Body(req);
      body["verb"] = "allocate";
      command(res, body);
    });
  });
  s.Delete(R"(/allocations/(\d+))", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      command(res, {{"verb", "release"}, {"alloc_id", std::stoull(std::string(req.matches[1]))}});
    });
  });
  s.Post("/pipelines", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      json body = Body(req);
      body["verb"] = "submit_changeset";
      command(res, body);
    });
  });
  s.Post(R"(/pipelines/([^/]+)/approve)", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      json body = Body(req);
      command(res, {{"verb", "approve"},
                    {"pipeline", std::string(req.matches[1])},
                    {"approver", body.value("approver", std::string("operator"))}});
    });
  });
  s.Post("/alerts/ack", [command](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      json body = Body(req);
      body["verb"] = "acknowledge";
      command(res, body);
    });
  });

  s.Get("/events", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&]() {
      const std::uint64_t since = QueryU64(req, "since", 0);
      const bool follow = req.has_param("follow") ? req.get_param_value("follow") != "0" : true;
      if (!follow) {
        std::string body;
        for (const auto &line : EventsSince(since)) body += line + "\n";
        res.set_content(body, kNdjson);
        return;
      }
      auto last = std::make_shared<std::uint64_t>(since);
      res.set_chunked_content_provider(kNdjson, [this, last](std::size_t, httplib::DataSink &sink) {
        while (true) {
          {
            std::lock_guard<std::mutex> lk(task_mu_);
            if (stop_) break;
          }
          if (!sink.is_writable()) return false;
          auto lines = EventsSince(*last);
          if (lines.empty()) {
            WaitForEvents(*last, 250);
            continue;
          }
          std::string chunk;
          for (const auto &l : lines) chunk += l + "\n";
          *last += lines.size();
          return sink.write(chunk.data(), chunk.size());
        }
        sink.done();
        return true;
      });
    });
  });
}

}  // namespace fleetops::api
