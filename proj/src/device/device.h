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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common/time.h"
#include "topology/topology.h"

namespace fleetops::device {

enum class ChannelKind { kVoltage, kCurrent, kTemperature, kFan, kFlag };

struct ChannelSpec {
  std::string_view name;
  ChannelKind kind;
  std::string_view unit;
  double nominal;
  /// Half-width of the uniform noise band.
  double noise;
  /// Plausible range; readings outside it are alert-worthy.
  double lo;
  double hi;
  /// Fed by the per-system 6 V analog supply.
  bool analog;
};

inline constexpr int kChannelCount = 29;

const std::array<ChannelSpec, kChannelCount> &Channels();
std::optional<int> ChannelIndex(std::string_view name);

/// Readings are quantized to this step so stored series are exact binary
/// fractions.
inline constexpr double kQuantum = 1.0 / 1024.0;

using ComponentId = std::uint32_t;
using SystemIndex = std::size_t;

struct HealthReport {
  std::string system;
  Nanos t = 0;
  bool sram_ok = false;
  bool highspeed_links_ok = false;
  bool asic_supplies_ok = false;
  std::string fpga_design_revision;
};

/// Per-system hardware state seen by monitoring: component power (as a
/// count of active faults covering each component), controller hangs and
/// the loaded FPGA design revision. Telemetry values are a pure function of
/// (seed, system, channel, t) and the fault state of that system alone.
class DeviceModel {
 public:
  DeviceModel(std::shared_ptr<const topology::Topology> topo, std::uint64_t seed,
              std::string initial_revision = "stable-0");

  /// Components are the fabric nodes (by node id) plus one ASIC analog
  /// domain per system, named "<system>.asic_analog".
  std::size_t component_count() const { return refs_.size(); }
  std::optional<ComponentId> FindComponent(std::string_view name) const;
  std::string ComponentName(ComponentId c) const;
  ComponentId NodeComponent(topology::NodeIndex n) const { return n; }
  ComponentId AnalogComponent(SystemIndex s) const;
  /// Returns the network node behind a component, if any.
  std::optional<topology::NodeIndex> ComponentNode(ComponentId c) const;

  /// Adds one fault reference to each component; returns those that lost
  /// power as a result.
  std::vector<ComponentId> Cut(const std::vector<ComponentId> &components);
  /// Drops one reference; returns those that regained power.
  std::vector<ComponentId> Restore(const std::vector<ComponentId> &components);
  bool powered(ComponentId c) const { return refs_[c] == 0; }
  std::vector<bool> PowerSnapshot() const;

  void Hang(SystemIndex s) { ++hangs_[s]; }
  void Unhang(SystemIndex s);
  bool hung(SystemIndex s) const { return hangs_[s] > 0; }

  bool controller_powered(SystemIndex s) const;
  bool fpgas_powered(SystemIndex s) const;
  bool analog_ok(SystemIndex s) const { return powered(AnalogComponent(s)); }
  /// Samples are produced iff the controller is powered and responsive.
  bool telemetry_up(SystemIndex s) const { return controller_powered(s) && !hung(s); }

  const std::string &revision(SystemIndex s) const { return revisions_[s]; }
  void LoadBitfile(SystemIndex s, std::string revision) { revisions_[s] = std::move(revision); }

  /// Fills one reading per channel for time t.
  void Sample(SystemIndex s, Nanos t, double *out) const;
  double SampleChannel(SystemIndex s, int channel, Nanos t) const;
  HealthReport Check(SystemIndex s, Nanos t) const;
  /// Accuracy of the nightly reference task: nominal in [0.90, 0.99],
  /// collapsing when the analog supply is down.
  double FidelityAccuracy(SystemIndex s, Nanos t) const;

  std::uint64_t seed() const { return seed_; }
  const topology::Topology &topology() const { return *topo_; }

 private:
  std::shared_ptr<const topology::Topology> topo_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> refs_;
  std::vector<std::uint32_t> hangs_;
  std::vector<std::string> revisions_;
};

}  // namespace fleetops::device
