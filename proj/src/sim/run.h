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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faults/scenario.h"
#include "sim/simulation.h"

namespace fleetops::sim {

struct CheckVerdict {
  std::string name;
  std::string type;
  bool pass = false;
  nlohmann::json measured;
  nlohmann::json expected;
  std::string note;
};
nlohmann::json ToJson(const CheckVerdict &v);

/// Evaluates one declared check against a finished run.
CheckVerdict EvaluateCheck(Simulation &sim, const faults::CheckDecl &check);

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Nanos duration = 0;
  std::string trace_hash;
  std::uint64_t events_processed = 0;
  double wall_seconds = 0;
  std::vector<CheckVerdict> checks;
  std::vector<std::string> outputs;

  bool pass() const;
  nlohmann::json ToJson() const;
  std::string ToText() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir;  // empty: nothing written
};

/// Loads nothing; runs an already parsed scenario to completion, evaluates
/// its checks and writes outputs when asked.
RunReport RunScenario(const faults::Scenario &scenario, const RunOptions &options);

/// The same scenario with its faults and checks stripped, used as the
/// reference run for independence checks.
faults::Scenario WithoutFaults(const faults::Scenario &scenario);

/// Seed from FLEETOPS_SEED when set.
std::optional<std::uint64_t> SeedFromEnvironment();

}  // namespace fleetops::sim
