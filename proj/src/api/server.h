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

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "common/error.h"
#include "faults/scenario.h"
#include "sim/simulation.h"

namespace httplib {
class Server;
}

namespace fleetops::api {

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  double pace = 1.0;  // simulated seconds per wall second
  std::string staging_dir;
  int tick_ms = 10;
};

/// HTTP status for an error code.
int HttpStatus(ErrorCode code);

/// Drives one simulation at a wall-clock pace and serves the control plane
/// over HTTP. The simulation lives on its own thread; HTTP handlers either
/// read the last published snapshot or hand work to that thread.
class ApiServer {
 public:
  ApiServer(faults::Scenario scenario, ServeOptions options);
  ~ApiServer();
  ApiServer(const ApiServer &) = delete;
  ApiServer &operator=(const ApiServer &) = delete;

  /// Binds and starts both threads. Throws BindFailure or InvalidArgument.
  void Start();
  void Stop();
  /// Blocks until Stop is called from another thread.
  void Wait();
  int port() const { return port_; }
  bool running() const { return running_; }

  /// Applies a control-plane verb at the next event boundary and returns
  /// {"applied_t": seconds, "result": ...}. Throws the module error.
  nlohmann::json Command(const nlohmann::json &command);
  /// Runs a read-only function on the simulation thread.
  nlohmann::json Read(std::function<nlohmann::json(const sim::Simulation &)> fn);

  std::string FleetJson() const;
  std::string AlertsJson() const;
  /// Stream records with seq greater than `since`, as NDJSON lines.
  std::vector<std::string> EventsSince(std::uint64_t since) const;
  /// Waits up to `timeout_ms` for a record past `since`; true when one exists.
  bool WaitForEvents(std::uint64_t since, int timeout_ms) const;

 private:
  struct Task {
    std::function<nlohmann::json(sim::Simulation &)> fn;
    std::promise<nlohmann::json> done;
  };

  void SimLoop();
  void DrainTasks();
  void Publish();
  nlohmann::json Submit(std::function<nlohmann::json(sim::Simulation &)> fn);
  void Routes();

  faults::Scenario scenario_;
  ServeOptions options_;
  std::unique_ptr<sim::Simulation> sim_;
  std::unique_ptr<httplib::Server> http_;
  std::thread sim_thread_;
  std::thread http_thread_;
  int port_ = 0;
  std::atomic<bool> running_{false};

  std::mutex task_mu_;
  std::condition_variable task_cv_;
  std::deque<std::shared_ptr<Task>> tasks_;
  std::atomic<bool> stop_{false};

  mutable std::mutex pub_mu_;
  mutable std::condition_variable pub_cv_;
  std::shared_ptr<const std::string> fleet_;
  std::shared_ptr<const std::string> alerts_;
  std::vector<std::string> events_;
  std::size_t published_events_ = 0;

  std::mutex wait_mu_;
  std::condition_variable wait_cv_;
};

}  // namespace fleetops::api
