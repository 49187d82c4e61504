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

#include "device/device.h"

#include <cmath>

#include "common/error.h"
#include "common/hash.h"

namespace fleetops::device {
namespace {

using K = ChannelKind;

constexpr std::array<ChannelSpec, kChannelCount> kChannels = {{
    {"in_12v", K::kVoltage, "V", 12.0, 0.05, 11.4, 12.6, false},
    {"fpga_vccint", K::kVoltage, "V", 1.0, 0.004, 0.95, 1.05, false},
    {"fpga_vccaux", K::kVoltage, "V", 1.8, 0.008, 1.71, 1.89, false},
    {"fpga_vcco", K::kVoltage, "V", 2.5, 0.01, 2.375, 2.625, false},
    {"ddr", K::kVoltage, "V", 1.35, 0.006, 1.28, 1.42, false},
    {"periph_3v3", K::kVoltage, "V", 3.3, 0.015, 3.135, 3.465, false},
    {"periph_5v", K::kVoltage, "V", 5.0, 0.02, 4.75, 5.25, false},
    {"ctrl_1v8", K::kVoltage, "V", 1.8, 0.008, 1.71, 1.89, false},
    {"in_6v", K::kVoltage, "V", 6.0, 0.03, 5.7, 6.3, true},
    {"asic_vdd12", K::kVoltage, "V", 1.2, 0.005, 1.14, 1.26, false},
    {"asic_vdd25", K::kVoltage, "V", 2.5, 0.01, 2.375, 2.625, true},
    {"asic_vdd_analog", K::kVoltage, "V", 1.8, 0.008, 1.71, 1.89, true},
    {"in_12v_current", K::kCurrent, "A", 4.0, 0.2, 0.5, 8.0, false},
    {"fpga_current", K::kCurrent, "A", 2.5, 0.15, 0.3, 5.0, false},
    {"periph_current", K::kCurrent, "A", 1.2, 0.08, 0.1, 3.0, false},
    {"in_6v_current", K::kCurrent, "A", 1.5, 0.1, 0.2, 3.0, true},
    {"asic_digital_current", K::kCurrent, "A", 0.8, 0.05, 0.1, 2.0, false},
    {"asic_analog_current", K::kCurrent, "A", 0.6, 0.04, 0.1, 1.5, true},
    {"temp_asic0", K::kTemperature, "degC", 42.0, 1.5, 5.0, 95.0, false},
    {"temp_asic1", K::kTemperature, "degC", 42.0, 1.5, 5.0, 95.0, false},
    {"temp_fpga0", K::kTemperature, "degC", 48.0, 1.5, 5.0, 95.0, false},
    {"temp_fpga1", K::kTemperature, "degC", 48.0, 1.5, 5.0, 95.0, false},
    {"temp_ctrl", K::kTemperature, "degC", 45.0, 1.0, 5.0, 95.0, false},
    {"temp_psu12", K::kTemperature, "degC", 38.0, 1.0, 5.0, 95.0, false},
    {"temp_psu6", K::kTemperature, "degC", 36.0, 1.0, 5.0, 95.0, true},
    {"temp_ambient", K::kTemperature, "degC", 24.0, 0.5, 5.0, 45.0, false},
    {"fan_rpm", K::kFan, "rpm", 4200.0, 60.0, 1000.0, 8000.0, false},
    {"psu12_ok", K::kFlag, "bool", 1.0, 0.0, 1.0, 1.0, false},
    {"psu6_ok", K::kFlag, "bool", 1.0, 0.0, 1.0, 1.0, true},
}};

double Quantize(double v) { return std::nearbyint(v / kQuantum) * kQuantum; }

}  // namespace

const std::array<ChannelSpec, kChannelCount> &Channels() { return kChannels; }

std::optional<int> ChannelIndex(std::string_view name) {
  for (int i = 0; i < kChannelCount; ++i)
    if (kChannels[i].name == name) return i;
  return std::nullopt;
}

DeviceModel::DeviceModel(std::shared_ptr<const topology::Topology> topo, std::uint64_t seed,
                         std::string initial_revision)
    : topo_(std::move(topo)), seed_(seed) {
  refs_.assign(topo_->nodes().size() + topo_->systems().size(), 0);
  hangs_.assign(topo_->systems().size(), 0);
  revisions_.assign(topo_->systems().size(), initial_revision);
}

ComponentId DeviceModel::AnalogComponent(SystemIndex s) const {
  return static_cast<ComponentId>(topo_->nodes().size() + s);
}

std::optional<topology::NodeIndex> DeviceModel::ComponentNode(ComponentId c) const {
  if (c < topo_->nodes().size()) return c;
  return std::nullopt;
}

std::optional<ComponentId> DeviceModel::FindComponent(std::string_view name) const {
  if (auto n = topo_->FindNode(name)) return *n;
  constexpr std::string_view kSuffix = ".asic_analog";
  if (name.size() > kSuffix.size() && name.substr(name.size() - kSuffix.size()) == kSuffix)
    if (auto s = topo_->FindSystem(name.substr(0, name.size() - kSuffix.size()))) return AnalogComponent(*s);
  return std::nullopt;
}

std::string DeviceModel::ComponentName(ComponentId c) const {
  if (c < topo_->nodes().size()) return topo_->node(c).id;
  return topo_->systems()[c - topo_->nodes().size()].id + ".asic_analog";
}

std::vector<ComponentId> DeviceModel::Cut(const std::vector<ComponentId> &components) {
  std::vector<ComponentId> changed;
  for (ComponentId c : components)
    if (refs_.at(c)++ == 0) changed.push_back(c);
  return changed;
}

std::vector<ComponentId> DeviceModel::Restore(const std::vector<ComponentId> &components) {
  std::vector<ComponentId> changed;
  for (ComponentId c : components) {
    if (refs_.at(c) == 0) throw Error(ErrorCode::kNotApplied, ComponentName(c) + " is not cut");
    if (--refs_[c] == 0) changed.push_back(c);
  }
  return changed;
}

std::vector<bool> DeviceModel::PowerSnapshot() const {
  std::vector<bool> out(refs_.size());
  for (std::size_t i = 0; i < refs_.size(); ++i) out[i] = refs_[i] == 0;
  return out;
}

void DeviceModel::Unhang(SystemIndex s) {
  if (hangs_[s] == 0) throw Error(ErrorCode::kNotApplied, topo_->systems()[s].id + " is not hung");
  --hangs_[s];
}

bool DeviceModel::controller_powered(SystemIndex s) const {
  const auto &c = topo_->systems()[s].controller;
  return c && powered(*c);
}

bool DeviceModel::fpgas_powered(SystemIndex s) const {
  for (auto f : topo_->systems()[s].fpgas)
    if (!powered(f)) return false;
  return true;
}

double DeviceModel::SampleChannel(SystemIndex s, int channel, Nanos t) const {
  const ChannelSpec &c = kChannels[channel];
  const double u = HashUniform(seed_, s, static_cast<std::uint64_t>(channel), static_cast<std::uint64_t>(t));
  if (c.analog && !analog_ok(s)) {
    if (c.kind == ChannelKind::kFlag) return 0.0;
    if (c.kind == ChannelKind::kTemperature) return Quantize(kChannels[25].nominal + c.noise * (2 * u - 1));
    return Quantize(0.004 * u);
  }
  if (c.kind == ChannelKind::kFlag) return c.nominal;
  // Per-system calibration offset within a quarter of the noise band.
  const double offset = 0.25 * c.noise * (2 * HashUniform(seed_, s, channel, ~0ULL) - 1);
  return Quantize(c.nominal + offset + c.noise * (2 * u - 1));
}

void DeviceModel::Sample(SystemIndex s, Nanos t, double *out) const {
  for (int i = 0; i < kChannelCount; ++i) out[i] = SampleChannel(s, i, t);
}

HealthReport DeviceModel::Check(SystemIndex s, Nanos t) const {
  HealthReport r;
  r.system = topo_->systems()[s].id;
  r.t = t;
  r.sram_ok = fpgas_powered(s);
  r.highspeed_links_ok = fpgas_powered(s);
  r.asic_supplies_ok = analog_ok(s);
  r.fpga_design_revision = revisions_[s];
  return r;
}

double DeviceModel::FidelityAccuracy(SystemIndex s, Nanos t) const {
  const double u = HashUniform(seed_ ^ 0xf1de1177ULL, s, 0, static_cast<std::uint64_t>(t));
  double acc = 0.90 + 0.09 * u;
  if (!analog_ok(s) || !fpgas_powered(s)) acc *= 0.1;
  return acc;
}

}  // namespace fleetops::device
