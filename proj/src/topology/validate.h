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

#include <string>
#include <string_view>
#include <vector>

#include "topology/topology.h"

namespace fleetops::topology {

enum class ViolationKind {
  kEmptyTopology,
  kCoreSwitchCount,
  kInvalidCapacity,
  kTieringViolation,
  kPortModeViolation,
  kPowerCompositionViolation,
  kCompositionViolation,
  kVlanProvisioningViolation,
};

std::string_view ViolationKindName(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string subject;
  std::string message;
};

/// Every structural rule the fabric and the rack composition must satisfy.
/// An empty result means the topology is valid.
std::vector<Violation> ValidateTopology(const Topology &t);

}  // namespace fleetops::topology
