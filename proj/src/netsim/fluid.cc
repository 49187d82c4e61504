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

#include "netsim/fluid.h"

#include "common/error.h"

namespace fleetops::netsim {

std::vector<double> WeightedMaxMin(double capacity, const std::vector<double> &weights,
                                   const std::vector<double> &demands) {
  if (weights.size() != demands.size()) throw Error(ErrorCode::kInvalidArgument, "weights/demands size mismatch");
  const std::size_t n = weights.size();
  std::vector<double> share(n, 0.0);
  std::vector<bool> done(n, false);
  double left = capacity;
  // Each round either satisfies at least one class or splits what is left.
  for (std::size_t round = 0; round < n && left > 0; ++round) {
    double wsum = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i]) wsum += weights[i];
    if (wsum <= 0) break;
    bool satisfied = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      if (demands[i] - share[i] <= left * weights[i] / wsum) {
        left -= demands[i] - share[i];
        share[i] = demands[i];
        done[i] = true;
        satisfied = true;
      }
    }
    if (!satisfied) {
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i]) share[i] += left * weights[i] / wsum;
      left = 0;
    }
  }
  return share;
}

}  // namespace fleetops::netsim
