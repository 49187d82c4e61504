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

#include "topology/topology.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.h"

namespace fleetops::topology {

using nlohmann::json;

namespace {

const std::map<std::string, NodeKind, std::less<>> kKindNames = {
    {"CoreSwitch", NodeKind::kCoreSwitch},
    {"SpineSwitch", NodeKind::kSpineSwitch},
    {"LeafSwitch", NodeKind::kLeafSwitch},
    {"ClusterNode", NodeKind::kClusterNode},
    {"RemoteClusterNode", NodeKind::kRemoteClusterNode},
    {"SystemController", NodeKind::kSystemController},
    {"FpgaEndpoint", NodeKind::kFpgaEndpoint},
    {"Pdu", NodeKind::kPdu},
    {"CentralMonitorHost", NodeKind::kCentralMonitorHost},
};

const std::map<std::string, Location, std::less<>> kLocationNames = {
    {"ServerRoom", Location::kServerRoom},
    {"MachineHall", Location::kMachineHall},
    {"Laboratory", Location::kLaboratory},
};

Error ParseFailure(const std::string &msg) { return Error(ErrorCode::kParseError, msg); }

template <typename T>
T Required(const json &obj, const char *key, const std::string &ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseFailure(ctx + ": missing '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    throw ParseFailure(ctx + ": field '" + key + "': " + e.what());
  }
}

Vlan ParseVlan(const json &v, const std::string &ctx) {
  if (!v.is_number_integer()) throw ParseFailure(ctx + ": VLAN id must be an integer");
  auto parsed = VlanFromNumber(v.get<int>());
  if (!parsed) throw ParseFailure(ctx + ": VLAN id " + v.dump() + " outside 1..4");
  return *parsed;
}

PortMode ParsePortMode(const json &pm, const std::string &ctx) {
  auto mode = Required<std::string>(pm, "mode", ctx);
  PortMode out;
  if (mode == "trunk") {
    out.kind = PortMode::Kind::kTrunkTagged;
    for (const auto &v : Required<json>(pm, "vlans", ctx)) out.vlans.Insert(ParseVlan(v, ctx));
  } else if (mode == "access") {
    out.kind = PortMode::Kind::kAccessUntagged;
    // Several VLANs on an access port are representable so that validation
    // can report them; the loader does not reject them.
    if (pm.contains("vlans")) {
      for (const auto &v : pm["vlans"]) out.vlans.Insert(ParseVlan(v, ctx));
    } else {
      out.vlans.Insert(ParseVlan(Required<json>(pm, "vlan", ctx), ctx));
    }
  } else {
    throw ParseFailure(ctx + ": unknown port mode '" + mode + "'");
  }
  return out;
}

json PortModeJson(const PortMode &m) {
  json j;
  std::vector<int> ids;
  for (Vlan v : m.vlans.ToVector()) ids.push_back(VlanNumber(v));
  if (m.kind == PortMode::Kind::kTrunkTagged) {
    j["mode"] = "trunk";
    j["vlans"] = ids;
  } else {
    j["mode"] = "access";
    if (ids.size() == 1) {
      j["vlan"] = ids[0];
    } else {
      j["vlans"] = ids;
    }
  }
  return j;
}

}  // namespace

std::optional<Vlan> VlanFromNumber(int id) {
  if (id < 1 || id > kVlanCount) return std::nullopt;
  return static_cast<Vlan>(id);
}

std::string_view VlanRoleName(Vlan v) {
  switch (v) {
    case Vlan::kInfraMgmt: return "InfraMgmt";
    case Vlan::kClusterIpmi: return "ClusterIpmi";
    case Vlan::kSystemMgmt: return "SystemMgmt";
    case Vlan::kExperimentData: return "ExperimentData";
  }
  return "?";
}

std::vector<Vlan> VlanSet::ToVector() const {
  std::vector<Vlan> out;
  for (Vlan v : kAllVlans)
    if (Contains(v)) out.push_back(v);
  return out;
}

std::string_view NodeKindName(NodeKind k) {
  for (const auto &[name, kind] : kKindNames)
    if (kind == k) return name;
  return "?";
}

std::string_view LocationName(Location l) {
  for (const auto &[name, loc] : kLocationNames)
    if (loc == l) return name;
  return "?";
}

bool IsSwitch(NodeKind k) {
  return k == NodeKind::kCoreSwitch || k == NodeKind::kSpineSwitch || k == NodeKind::kLeafSwitch;
}

const PortMode *Link::EffectiveMode(bool b_side) const {
  const LinkEnd &self = b_side ? b : a;
  const LinkEnd &peer = b_side ? a : b;
  if (self.mode) return &*self.mode;
  if (peer.mode) return &*peer.mode;
  return nullptr;
}

Topology Topology::LoadFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open topology '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception &e) {
    throw ParseFailure(path + ": " + e.what());
  }
  return Load(doc);
}

Topology Topology::Load(const json &doc) {
  if (!doc.is_object()) throw ParseFailure("topology document must be an object");
  Topology t;
  t.name_ = doc.value("name", std::string("unnamed"));

  for (const auto &n : doc.value("nodes", json::array())) {
    auto id = Required<std::string>(n, "id", "node");
    std::string ctx = "node '" + id + "'";
    auto kind_name = Required<std::string>(n, "kind", ctx);
    auto kind = kKindNames.find(kind_name);
    if (kind == kKindNames.end()) throw ParseFailure(ctx + ": unknown kind '" + kind_name + "'");
    auto loc_name = n.value("location", std::string("ServerRoom"));
    auto loc = kLocationNames.find(loc_name);
    if (loc == kLocationNames.end()) throw ParseFailure(ctx + ": unknown location '" + loc_name + "'");
    if (t.node_index_.count(id)) throw ParseFailure("duplicate node id '" + id + "'");
    t.node_index_[id] = static_cast<NodeIndex>(t.nodes_.size());
    t.nodes_.push_back({id, kind->second, loc->second});
  }

  auto resolve = [&](const std::string &id, const std::string &ctx) -> NodeIndex {
    auto it = t.node_index_.find(id);
    if (it == t.node_index_.end())
      throw Error(ErrorCode::kDanglingReference, ctx + " references unknown node '" + id + "'");
    return it->second;
  };

  std::map<std::pair<NodeIndex, std::string>, PortMode> modes;
  for (const auto &pm : doc.value("port_modes", json::array())) {
    auto node = Required<std::string>(pm, "node", "port_mode");
    auto port = Required<std::string>(pm, "port", "port_mode");
    std::string ctx = "port_mode " + node + "/" + port;
    modes[{resolve(node, ctx), port}] = ParsePortMode(pm, ctx);
  }

  for (const auto &l : doc.value("links", json::array())) {
    auto a = Required<std::string>(l, "a", "link");
    auto b = Required<std::string>(l, "b", "link");
    auto a_port = l.value("a_port", std::string("eth0"));
    auto b_port = l.value("b_port", std::string("eth0"));
    std::string id = l.value("id", a + "/" + a_port + "--" + b + "/" + b_port);
    std::string ctx = "link '" + id + "'";
    Link link;
    link.id = id;
    link.a = {resolve(a, ctx), a_port, std::nullopt};
    link.b = {resolve(b, ctx), b_port, std::nullopt};
    if (auto it = modes.find({link.a.node, a_port}); it != modes.end()) link.a.mode = it->second;
    if (auto it = modes.find({link.b.node, b_port}); it != modes.end()) link.b.mode = it->second;
    link.capacity_bps = Required<double>(l, "capacity_bps", ctx);
    link.propagation = FromSeconds(l.value("propagation_s", 1e-6));
    if (t.link_index_.count(id)) throw ParseFailure("duplicate link id '" + id + "'");
    t.link_index_[id] = static_cast<LinkIndex>(t.links_.size());
    t.links_.push_back(std::move(link));
  }

  for (const auto &r : doc.value("racks", json::array())) {
    Rack rack;
    rack.id = Required<std::string>(r, "id", "rack");
    auto loc_name = r.value("location", std::string("MachineHall"));
    auto loc = kLocationNames.find(loc_name);
    if (loc == kLocationNames.end()) throw ParseFailure("rack '" + rack.id + "': unknown location");
    rack.location = loc->second;
    std::size_t rack_idx = t.racks_.size();
    for (const auto &d : r.value("drawers", json::array())) {
      Drawer drawer;
      drawer.id = Required<std::string>(d, "id", "drawer");
      std::string dctx = "drawer '" + drawer.id + "'";
      drawer.rack = rack_idx;
      if (d.contains("leaf")) drawer.leaf = resolve(d["leaf"].get<std::string>(), dctx);
      drawer.dc12_feeds = d.value("dc12_feeds", std::vector<std::string>{});
      std::size_t drawer_idx = t.drawers_.size();
      for (const auto &s : d.value("systems", json::array())) {
        System sys;
        sys.id = Required<std::string>(s, "id", "system");
        std::string sctx = "system '" + sys.id + "'";
        if (s.contains("controller")) sys.controller = resolve(s["controller"].get<std::string>(), sctx);
        for (const auto &f : s.value("fpgas", json::array())) sys.fpgas.push_back(resolve(f.get<std::string>(), sctx));
        sys.analog_feed = s.value("analog_feed", std::string());
        sys.productive = s.value("productive", true);
        sys.drawer = drawer_idx;
        if (t.system_index_.count(sys.id)) throw ParseFailure("duplicate system id '" + sys.id + "'");
        t.system_index_[sys.id] = t.systems_.size();
        drawer.systems.push_back(t.systems_.size());
        t.systems_.push_back(std::move(sys));
      }
      if (t.drawer_index_.count(drawer.id)) throw ParseFailure("duplicate drawer id '" + drawer.id + "'");
      t.drawer_index_[drawer.id] = drawer_idx;
      rack.drawers.push_back(drawer_idx);
      t.drawers_.push_back(std::move(drawer));
    }
    t.racks_.push_back(std::move(rack));
  }

  t.BuildIndices();
  return t;
}

void Topology::BuildIndices() {
  adjacency_.assign(nodes_.size(), {});
  for (LinkIndex l = 0; l < links_.size(); ++l) {
    adjacency_[links_[l].a.node].push_back({l, links_[l].b.node, Directed(l, false)});
    adjacency_[links_[l].b.node].push_back({l, links_[l].a.node, Directed(l, true)});
  }
  for (auto &adj : adjacency_) {
    std::stable_sort(adj.begin(), adj.end(), [&](const Adjacency &x, const Adjacency &y) {
      return nodes_[x.peer].id < nodes_[y.peer].id;
    });
  }
  node_system_.assign(nodes_.size(), std::nullopt);
  for (std::size_t s = 0; s < systems_.size(); ++s) {
    if (systems_[s].controller) node_system_[*systems_[s].controller] = s;
    for (NodeIndex f : systems_[s].fpgas) node_system_[f] = s;
  }
}

std::optional<NodeIndex> Topology::FindNode(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex Topology::NodeByName(std::string_view id) const {
  auto n = FindNode(id);
  if (!n) throw Error(ErrorCode::kUnknownEntity, "unknown node '" + std::string(id) + "'");
  return *n;
}

std::optional<LinkIndex> Topology::FindLink(std::string_view id) const {
  auto it = link_index_.find(std::string(id));
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Topology::FindSystem(std::string_view id) const {
  auto it = system_index_.find(std::string(id));
  if (it == system_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Topology::FindDrawer(std::string_view id) const {
  auto it = drawer_index_.find(std::string(id));
  if (it == drawer_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Topology::SystemOfNode(NodeIndex n) const {
  if (n >= node_system_.size()) return std::nullopt;
  return node_system_[n];
}

std::string Topology::DirectedName(DirectedLink d) const {
  return nodes_[Source(d)].id + "->" + nodes_[Target(d)].id;
}

bool Topology::LinkCarries(LinkIndex l, Vlan v) const {
  const Link &link = links_[l];
  const PortMode *a = link.EffectiveMode(false);
  const PortMode *b = link.EffectiveMode(true);
  return a && b && a->Carries(v) && b->Carries(v);
}

Topology Topology::WithLinkCapacity(LinkIndex l, double capacity_bps) const {
  Topology copy = *this;
  copy.links_.at(l).capacity_bps = capacity_bps;
  return copy;
}

json Topology::ToJson() const {
  json doc;
  doc["name"] = name_;
  doc["nodes"] = json::array();
  for (const auto &n : nodes_) {
    doc["nodes"].push_back(
        {{"id", n.id}, {"kind", std::string(NodeKindName(n.kind))}, {"location", std::string(LocationName(n.location))}});
  }
  doc["links"] = json::array();
  doc["port_modes"] = json::array();
  for (const auto &l : links_) {
    doc["links"].push_back({{"id", l.id},
                            {"a", nodes_[l.a.node].id},
                            {"a_port", l.a.port},
                            {"b", nodes_[l.b.node].id},
                            {"b_port", l.b.port},
                            {"capacity_bps", l.capacity_bps},
                            {"propagation_s", ToSeconds(l.propagation)}});
    for (const LinkEnd *end : {&l.a, &l.b}) {
      if (!end->mode) continue;
      json pm = PortModeJson(*end->mode);
      pm["node"] = nodes_[end->node].id;
      pm["port"] = end->port;
      doc["port_modes"].push_back(pm);
    }
  }
  doc["racks"] = json::array();
  for (const auto &r : racks_) {
    json rack = {{"id", r.id}, {"location", std::string(LocationName(r.location))}, {"drawers", json::array()}};
    for (std::size_t d : r.drawers) {
      const Drawer &dr = drawers_[d];
      json drawer = {{"id", dr.id}, {"dc12_feeds", dr.dc12_feeds}, {"systems", json::array()}};
      if (dr.leaf) drawer["leaf"] = nodes_[*dr.leaf].id;
      for (std::size_t s : dr.systems) {
        const System &sys = systems_[s];
        json js = {{"id", sys.id}, {"analog_feed", sys.analog_feed}, {"productive", sys.productive}};
        if (sys.controller) js["controller"] = nodes_[*sys.controller].id;
        js["fpgas"] = json::array();
        for (NodeIndex f : sys.fpgas) js["fpgas"].push_back(nodes_[f].id);
        drawer["systems"].push_back(js);
      }
      rack["drawers"].push_back(drawer);
    }
    doc["racks"].push_back(rack);
  }
  return doc;
}

}  // namespace fleetops::topology
