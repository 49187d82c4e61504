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

#include <vector>

namespace fleetops::netsim {

/// Weighted max-min fair allocation of one link's capacity among classes
/// with the given weights and offered demands (infinity for backlogged).
std::vector<double> WeightedMaxMin(double capacity, const std::vector<double> &weights,
                                   const std::vector<double> &demands);

}  // namespace fleetops::netsim
