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

#include "unit/oracles.h"

#include <mpfr.h>

#include <algorithm>
#include <functional>
#include <set>

namespace fleetops::testing {

std::vector<double> FluidShares(double capacity, const std::vector<double> &weights,
                                const std::vector<double> &demands) {
  // Bisection on the water level L: class i receives min(d_i, L * w_i).
  auto used = [&](double level) {
    double sum = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) sum += std::min(demands[i], level * weights[i]);
    return sum;
  };
  double total_demand = 0;
  for (double d : demands) total_demand += d;
  std::vector<double> out(weights.size());
  if (total_demand <= capacity) return demands;
  double lo = 0, hi = 1;
  while (used(hi) < capacity) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (used(mid) < capacity ? lo : hi) = mid;
  }
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = std::min(demands[i], hi * weights[i]);
  return out;
}

double ExactSumReference(const std::vector<double> &values) {
  mpfr_t acc;
  mpfr_init2(acc, 4096);
  mpfr_set_zero(acc, 1);
  for (double v : values) mpfr_add_d(acc, acc, v, MPFR_RNDN);
  double out = mpfr_get_d(acc, MPFR_RNDN);
  mpfr_clear(acc);
  return out;
}

std::vector<std::vector<std::string>> EnumeratePaths(const std::vector<RefEdge> &edges,
                                                     const std::vector<std::string> &forwarders,
                                                     const std::string &src, const std::string &dst, int vlan) {
  std::set<std::string> fwd(forwarders.begin(), forwarders.end());
  std::map<std::string, std::vector<std::string>> adj;
  auto has = [](const std::vector<int> &v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  for (const auto &e : edges) {
    if (!has(e.a_vlans, vlan) || !has(e.b_vlans, vlan)) continue;
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> stack{src};
  std::set<std::string> seen{src};
  std::function<void(const std::string &)> dfs = [&](const std::string &at) {
    if (at == dst) {
      out.push_back(stack);
      return;
    }
    if (at != src && !fwd.count(at)) return;
    for (const auto &next : adj[at]) {
      if (seen.count(next)) continue;
      seen.insert(next);
      stack.push_back(next);
      dfs(next);
      stack.pop_back();
      seen.erase(next);
    }
  };
  if (src == dst) return {{src}};
  dfs(src);
  return out;
}

std::vector<RefEdge> EdgesFromDocument(const nlohmann::json &doc) {
  std::map<std::pair<std::string, std::string>, std::vector<int>> modes;
  for (const auto &pm : doc["port_modes"]) {
    std::vector<int> v;
    if (pm.contains("vlans")) v = pm["vlans"].get<std::vector<int>>();
    else v = {pm["vlan"].get<int>()};
    modes[{pm["node"], pm["port"]}] = v;
  }
  std::vector<RefEdge> out;
  for (const auto &l : doc["links"]) {
    RefEdge e{l["a"], l["b"], {}, {}};
    auto a = modes.find({l["a"], l["a_port"]});
    auto b = modes.find({l["b"], l["b_port"]});
    if (a != modes.end()) e.a_vlans = a->second;
    if (b != modes.end()) e.b_vlans = b->second;
    if (e.a_vlans.empty()) e.a_vlans = e.b_vlans;
    if (e.b_vlans.empty()) e.b_vlans = e.a_vlans;
    out.push_back(e);
  }
  return out;
}

std::vector<std::string> SwitchesFromDocument(const nlohmann::json &doc) {
  std::vector<std::string> out;
  for (const auto &n : doc["nodes"]) {
    std::string k = n["kind"];
    if (k == "CoreSwitch" || k == "SpineSwitch" || k == "LeafSwitch") out.push_back(n["id"]);
  }
  return out;
}

}  // namespace fleetops::testing
