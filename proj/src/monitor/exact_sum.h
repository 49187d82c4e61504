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

namespace fleetops::monitor {

/// Error-free floating-point accumulator (Shewchuk partials). value() is the
/// exact sum of everything added, rounded once to nearest-even.
class ExactSum {
 public:
  void Add(double x);
  void Merge(const ExactSum &other);
  double value() const;
  const std::vector<double> &partials() const { return partials_; }
  void set_partials(std::vector<double> p) { partials_ = std::move(p); }

 private:
  std::vector<double> partials_;
};

}  // namespace fleetops::monitor
