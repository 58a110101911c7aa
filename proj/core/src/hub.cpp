// Copyright 2026 The cellbus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cellbus/hub.hpp"

#include <algorithm>
#include <sstream>

#include "cellbus/errors.hpp"

namespace cellbus {

namespace {

constexpr std::pair<Role, std::string_view> kRoleNames[] = {
    {Role::Mover, "mover"},           {Role::PoseSaver, "pose_saver"},
    {Role::SmartTool, "smart_tool"},  {Role::Translator, "translator"},
    {Role::RfidCam, "rfidcam"},       {Role::Operator, "operator"},
    {Role::Dock, "dock"},             {Role::MirSuite, "mir_suite"},
    {Role::Controller, "controller"}, {Role::Distributor, "distributor"},
    {Role::Collector, "collector"},
};

constexpr std::pair<TopologyMode, std::string_view> kModeNames[] = {
    {TopologyMode::HubGateway, "hub-gateway"},
    {TopologyMode::HubDirect, "hub-direct"},
    {TopologyMode::NodeTypeDirect, "node-type"},
    {TopologyMode::NodeTypeCollector, "node-type-collector"},
};

bool valid_segment(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool is_legacy(const DomainId& d) { return d.name == "legacy" || d.name.rfind("legacy/", 0) == 0; }

TopicEntry entry(const DomainId& domain, const std::string& path, const SchemaId& schema, QosProfile qos) {
  return TopicEntry{domain, TopicName::parse(path), schema, qos};
}

std::string node_command_path(const std::string& node) { return "/cell/" + node + "/command"; }
std::string node_state_path(const std::string& node) { return "/cell/" + node + "/state"; }

FieldSpec optional_nested(const std::string& name, const SchemaId& schema) {
  return FieldSpec{name, FieldType{FieldKind::Nested, schema}, std::nullopt, true};
}

FieldSpec str_list(const std::string& name) {
  return FieldSpec{name, FieldType{FieldKind::StrList, {}}, std::nullopt, false};
}

class PlanBuilder {
 public:
  PlanBuilder(TopologyMode mode, TopologyOptions options) {
    plan_.mode = mode;
    plan_.options = options;
  }

  TopologyPlan build(const std::vector<HubConfig>& hubs) {
    validate(hubs);
    plan_.hubs = hubs;
    for (const auto& hub : plan_.hubs) {
      for (const auto& n : hub.nodes) {
        NodeBinding b;
        b.node = n;
        b.node.hub = hub.id;
        b.domain = hub.domain;
        plan_.nodes.emplace(n.name, std::move(b));
      }
    }
    for (const auto& hub : plan_.hubs) {
      if (!reachable(hub)) {
        for (const auto& n : hub.nodes) {
          if (auto s = role_interface(n.role).state) {
            plan_.nodes[n.name].state = add_topic(entry(hub.domain, node_state_path(n.name), *s, QosProfile::state()));
          }
        }
        continue;
      }
      switch (plan_.mode) {
        case TopologyMode::HubGateway:
        case TopologyMode::HubDirect:
          if (gateway_for(hub) == GatewayKind::DistributorCollector) {
            build_gateway_hub(hub);
          } else {
            build_direct_hub(hub);
          }
          break;
        case TopologyMode::NodeTypeDirect:
        case TopologyMode::NodeTypeCollector:
          build_type_hub(hub);
          break;
      }
    }
    if (plan_.mode == TopologyMode::NodeTypeCollector) {
      build_central_collector();
    }
    return std::move(plan_);
  }

 private:
  void validate(const std::vector<HubConfig>& hubs) {
    std::set<std::string> hub_ids, node_names;
    for (const auto& hub : hubs) {
      if (!valid_segment(hub.id)) {
        throw ConfigError("invalid hub id '" + hub.id + "'");
      }
      if (!hub_ids.insert(hub.id).second) {
        throw ConfigError("duplicate hub id '" + hub.id + "'");
      }
      if (hub.nodes.empty()) {
        throw ConfigError("hub '" + hub.id + "' has no nodes");
      }
      if (is_legacy(hub.domain) && !hub.bridged) {
        throw ConfigError("legacy hub '" + hub.id + "' must be bridged");
      }
      if (hub.bridged && hub.domain == plan_.controller_domain) {
        throw ConfigError("hub '" + hub.id + "' is bridged but shares the controller domain");
      }
      for (const auto& n : hub.nodes) {
        if (!valid_segment(n.name) || n.name == "stale" || n.name == "updated") {
          throw ConfigError("invalid node name '" + n.name + "'");
        }
        if (!node_names.insert(n.name).second) {
          throw ConfigError("duplicate node name '" + n.name + "'");
        }
        if (!(n.period > 0.0)) {
          throw ConfigError("node '" + n.name + "' needs a positive period");
        }
        if (n.role == Role::Distributor || n.role == Role::Collector) {
          throw ConfigError("gateway role on node '" + n.name + "' is generated, not declared");
        }
      }
    }
  }

  bool reachable(const HubConfig& hub) const { return hub.domain == plan_.controller_domain || hub.bridged; }

  GatewayKind gateway_for(const HubConfig& hub) const {
    const auto fallback =
        plan_.mode == TopologyMode::HubGateway ? GatewayKind::DistributorCollector : GatewayKind::Direct;
    return hub.gateway.value_or(fallback);
  }

  TopicEntry add_topic(TopicEntry e) {
    plan_.topics.insert(e);
    return e;
  }

  void add_schema(MessageSchema s) {
    for (const auto& existing : plan_.generated_schemas) {
      if (existing.id == s.id) {
        return;
      }
    }
    plan_.generated_schemas.push_back(std::move(s));
  }

  void add_bridge(const std::string& id, const HubConfig& hub, const TopicEntry& t, bool command_side) {
    const DomainId& ctl = plan_.controller_domain;
    BridgePlan b{id, hub.id, command_side ? ctl : hub.domain, command_side ? hub.domain : ctl, t, command_side};
    b.topic.domain = b.dst;
    plan_.bridges.push_back(std::move(b));
  }

  /// Registers `path` on the controller side and, when the hub is bridged,
  /// on the hub side with a bridge between them.
  TopicEntry crossing_topic(const HubConfig& hub, const std::string& bridge_id, const std::string& path,
                            const SchemaId& schema, QosProfile qos, bool command_side) {
    auto ctl = add_topic(entry(plan_.controller_domain, path, schema, qos));
    if (!hub.bridged) {
      return ctl;
    }
    auto local = add_topic(entry(hub.domain, path, schema, qos));
    add_bridge(bridge_id, hub, local, command_side);
    return ctl;
  }

  MessageSchema hub_command(const HubConfig& hub) {
    MessageSchema s{hub_command_schema(hub.id), {}, std::nullopt};
    for (const auto& n : hub.nodes) {
      if (auto c = role_interface(n.role).command) {
        s.fields.push_back(optional_nested(n.name, *c));
      }
    }
    return s;
  }

  MessageSchema keyed_state(const SchemaId& id, const std::vector<const NodeDescriptor*>& nodes) {
    MessageSchema s{id, {}, std::nullopt};
    for (const auto* n : nodes) {
      s.fields.push_back(optional_nested(n->name, *role_interface(n->role).state));
    }
    s.fields.push_back(str_list("stale"));
    s.fields.push_back(str_list("updated"));
    return s;
  }

  static std::vector<const NodeDescriptor*> with_command(const HubConfig& hub) {
    std::vector<const NodeDescriptor*> out;
    for (const auto& n : hub.nodes) {
      if (role_interface(n.role).command) {
        out.push_back(&n);
      }
    }
    return out;
  }

  static std::vector<const NodeDescriptor*> with_state(const HubConfig& hub) {
    std::vector<const NodeDescriptor*> out;
    for (const auto& n : hub.nodes) {
      if (role_interface(n.role).state) {
        out.push_back(&n);
      }
    }
    return out;
  }

  void mark_controllable(const std::string& node) { plan_.nodes[node].controllable = true; }

  void build_gateway_hub(const HubConfig& hub) {
    const auto cmd_nodes = with_command(hub);
    if (!cmd_nodes.empty()) {
      add_schema(hub_command(hub));
      const auto path = "/cell/hub/" + hub.id + "/command";
      const auto schema = hub_command_schema(hub.id);
      const auto ctl = crossing_topic(hub, hub.id + "/command", path, schema, QosProfile::command(), true);
      DistributorPlan d{hub.id + "_distributor", hub.id, hub.domain,
                        entry(hub.domain, path, schema, QosProfile::command()), {}};
      for (const auto* n : cmd_nodes) {
        auto local =
            add_topic(entry(hub.domain, node_command_path(n->name), *role_interface(n->role).command,
                            QosProfile::command()));
        d.outputs.emplace(n->name, local);
        plan_.nodes[n->name].command = CommandRoute{local, CommandWrap::Plain};
        plan_.controller_commands[n->name] = CommandRoute{ctl, CommandWrap::HubKey};
        mark_controllable(n->name);
      }
      plan_.distributors.push_back(std::move(d));
    }
    const auto state_nodes = with_state(hub);
    if (!state_nodes.empty()) {
      const auto schema = hub_state_schema(hub.id);
      add_schema(keyed_state(schema, state_nodes));
      const auto path = "/cell/hub/" + hub.id + "/state";
      const auto ctl = crossing_topic(hub, hub.id + "/state", path, schema, QosProfile::state(), false);
      CollectorPlan c{hub.id + "_collector", hub.id, hub.domain, {},
                      entry(hub.domain, path, schema, QosProfile::state())};
      for (const auto* n : state_nodes) {
        auto local = add_topic(
            entry(hub.domain, node_state_path(n->name), *role_interface(n->role).state, QosProfile::state()));
        c.inputs.emplace(n->name, local);
        plan_.nodes[n->name].state = local;
        plan_.controller_states[n->name] = StateRoute{ctl, StateUnwrap::Keyed};
        mark_controllable(n->name);
      }
      plan_.collectors.push_back(std::move(c));
    }
  }

  void build_direct_hub(const HubConfig& hub) {
    const auto cmd_nodes = with_command(hub);
    const bool shared = plan_.mode == TopologyMode::HubDirect && plan_.options.hub_direct_shared_topic;
    if (shared && !cmd_nodes.empty()) {
      add_schema(hub_command(hub));
      const auto path = "/cell/hub/" + hub.id + "/command";
      const auto schema = hub_command_schema(hub.id);
      const auto ctl = crossing_topic(hub, hub.id + "/command", path, schema, QosProfile::command(), true);
      for (const auto* n : cmd_nodes) {
        plan_.nodes[n->name].command =
            CommandRoute{entry(hub.domain, path, schema, QosProfile::command()), CommandWrap::HubKey};
        plan_.controller_commands[n->name] = CommandRoute{ctl, CommandWrap::HubKey};
        mark_controllable(n->name);
      }
    } else {
      for (const auto* n : cmd_nodes) {
        const auto schema = *role_interface(n->role).command;
        const auto ctl = crossing_topic(hub, hub.id + "/" + n->name + "/command", node_command_path(n->name),
                                        schema, QosProfile::command(), true);
        plan_.nodes[n->name].command =
            CommandRoute{entry(hub.domain, node_command_path(n->name), schema, QosProfile::command()),
                         CommandWrap::Plain};
        plan_.controller_commands[n->name] = CommandRoute{ctl, CommandWrap::Plain};
        mark_controllable(n->name);
      }
    }
    build_direct_states(hub, true);
  }

  void build_direct_states(const HubConfig& hub, bool controller_reads) {
    for (const auto* n : with_state(hub)) {
      const auto schema = *role_interface(n->role).state;
      const auto ctl = crossing_topic(hub, hub.id + "/" + n->name + "/state", node_state_path(n->name), schema,
                                      QosProfile::state(), false);
      plan_.nodes[n->name].state = entry(hub.domain, node_state_path(n->name), schema, QosProfile::state());
      if (controller_reads) {
        plan_.controller_states[n->name] = StateRoute{ctl, StateUnwrap::Plain};
      }
      mark_controllable(n->name);
    }
  }

  void build_type_hub(const HubConfig& hub) {
    for (const auto* n : with_command(hub)) {
      const auto cmd = *role_interface(n->role).command;
      const auto wrapped = typed_schema(cmd);
      add_schema(MessageSchema{wrapped,
                               {FieldSpec{"hub_id", FieldType{FieldKind::Str, {}}, std::nullopt, false},
                                FieldSpec{"robot_name", FieldType{FieldKind::Str, {}}, std::nullopt, false},
                                FieldSpec{"command", FieldType{FieldKind::Nested, cmd}, std::nullopt, false}},
                               std::nullopt});
      const std::string type(to_string(n->role));
      const auto path = "/cell/type/" + type + "/command";
      auto ctl = add_topic(entry(plan_.controller_domain, path, wrapped, QosProfile::command()));
      if (hub.bridged) {
        const auto id = hub.id + "/type/" + type + "/command";
        const bool exists = std::any_of(plan_.bridges.begin(), plan_.bridges.end(),
                                        [&](const BridgePlan& b) { return b.id == id; });
        auto local = add_topic(entry(hub.domain, path, wrapped, QosProfile::command()));
        if (!exists) {
          add_bridge(id, hub, local, true);
        }
      }
      plan_.nodes[n->name].command =
          CommandRoute{entry(hub.domain, path, wrapped, QosProfile::command()), CommandWrap::TypeFlag};
      plan_.controller_commands[n->name] = CommandRoute{ctl, CommandWrap::TypeFlag};
      mark_controllable(n->name);
    }
    build_direct_states(hub, plan_.mode == TopologyMode::NodeTypeDirect);
  }

  void build_central_collector() {
    std::vector<const NodeDescriptor*> state_nodes;
    for (const auto& hub : plan_.hubs) {
      if (reachable(hub)) {
        for (const auto* n : with_state(hub)) {
          state_nodes.push_back(n);
        }
      }
    }
    add_schema(keyed_state(kCollectorStateSchema, state_nodes));
    const auto out =
        add_topic(entry(plan_.controller_domain, "/cell/collector/state", kCollectorStateSchema, QosProfile::state()));
    CollectorPlan c{"state_collector", "", plan_.controller_domain, {}, out};
    for (const auto* n : state_nodes) {
      c.inputs.emplace(n->name, entry(plan_.controller_domain, node_state_path(n->name),
                                      *role_interface(n->role).state, QosProfile::state()));
      plan_.controller_states[n->name] = StateRoute{out, StateUnwrap::Keyed};
    }
    plan_.collectors.push_back(std::move(c));
  }

  TopologyPlan plan_;
};


}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) {
      return name;
    }
  }
  return "?";
}

Role parse_role(std::string_view text) {
  for (const auto& [r, name] : kRoleNames) {
    if (name == text) {
      return r;
    }
  }
  throw ConfigError("unknown role '" + std::string(text) + "'");
}

RoleInterface role_interface(Role role) {
  switch (role) {
    case Role::Mover:
    case Role::Translator: return {schemas::kCommandMover, schemas::kStateMover};
    case Role::PoseSaver: return {schemas::kCommandPoseSaver, schemas::kStatePoseSaver};
    case Role::SmartTool: return {schemas::kCommandTool, schemas::kStateTool};
    case Role::Operator: return {schemas::kCommandOperator, schemas::kStateOperator};
    case Role::RfidCam: return {std::nullopt, schemas::kSafetyStatus};
    case Role::Dock: return {std::nullopt, schemas::kStateDock};
    case Role::MirSuite: return {std::nullopt, schemas::kStateMirSuite};
    case Role::Controller:
    case Role::Distributor:
    case Role::Collector: return {};
  }
  return {};
}

std::string_view to_string(TopologyMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) {
      return name;
    }
  }
  return "?";
}

std::optional<TopologyMode> parse_topology(std::string_view text) {
  for (const auto& [m, name] : kModeNames) {
    if (name == text) {
      return m;
    }
  }
  return std::nullopt;
}

SchemaId hub_command_schema(const std::string& hub) { return SchemaId{"HubCommand_" + hub}; }
SchemaId hub_state_schema(const std::string& hub) { return SchemaId{"HubState_" + hub}; }
SchemaId typed_schema(const SchemaId& command) { return SchemaId{"Typed" + command.name}; }

TopologyPlan build_topology(const std::vector<HubConfig>& hubs, TopologyMode mode, TopologyOptions options) {
  return PlanBuilder(mode, options).build(hubs);
}

std::set<TopicEntry> TopologyPlan::controller_topics() const {
  std::set<TopicEntry> out;
  for (const auto& [_, r] : controller_commands) {
    out.insert(r.topic);
  }
  for (const auto& [_, r] : controller_states) {
    out.insert(r.topic);
  }
  return out;
}

BridgeManifest TopologyPlan::manifest() const {
  BridgeManifest m;
  for (const auto& b : bridges) {
    m.hubs[b.hub].push_back(BridgeManifestEntry{
        b.command_side ? BridgeDirection::ToLegacy : BridgeDirection::ToModern, b.topic.topic, b.topic.schema});
  }
  return m;
}

std::string TopologyPlan::report() const {
  std::ostringstream os;
  os << "mode " << to_string(mode) << "\n";
  os << "topics " << topics.size() << " controller_topics " << controller_topics().size() << " gateways "
     << gateway_count() << " bridges " << bridges.size() << "\n";
  for (const auto& t : topics) {
    os << "topic " << t.domain.name << " " << t.topic.str() << " " << t.schema.name << " depth " << t.qos.depth
       << "\n";
  }
  for (const auto& d : distributors) {
    os << "distributor " << d.name << " " << d.domain.name << " " << d.input.topic.str() << " ->";
    for (const auto& [node, t] : d.outputs) {
      os << " " << node << ":" << t.topic.str();
    }
    os << "\n";
  }
  for (const auto& c : collectors) {
    os << "collector " << c.name << " " << c.domain.name << " " << c.output.topic.str() << " <-";
    for (const auto& [node, t] : c.inputs) {
      os << " " << node << ":" << t.topic.str();
    }
    os << "\n";
  }
  for (const auto& b : bridges) {
    os << "bridge " << b.id << " " << b.src.name << " -> " << b.dst.name << " " << b.topic.topic.str() << " "
       << b.topic.schema.name << "\n";
  }
  for (const auto& [node, r] : controller_commands) {
    os << "command " << node << " " << r.topic.topic.str() << "\n";
  }
  for (const auto& [node, r] : controller_states) {
    os << "state " << node << " " << r.topic.topic.str() << "\n";
  }
  return os.str();
}

void register_plan_schemas(SchemaRegistry& registry, const TopologyPlan& plan) {
  for (const auto& s : plan.generated_schemas) {
    registry.register_schema(s);
  }
}

Message wrap_command(const CommandRoute& route, const std::string& hub, const std::string& node,
                     const Message& command) {
  switch (route.wrap) {
    case CommandWrap::Plain: return command;
    case CommandWrap::HubKey: return Message().set(node, command);
    case CommandWrap::TypeFlag:
      return Message().set("hub_id", Value{hub}).set("robot_name", Value{node}).set("command", command);
  }
  return command;
}

DistributorOutput distributor_step(const Message& hub_command, const std::map<std::string, TopicEntry>& outputs) {
  DistributorOutput out;
  for (const auto& [key, value] : hub_command.fields()) {
    auto it = outputs.find(key);
    const auto* nested = std::get_if<NestedMessage>(&value);
    if (it == outputs.end() || nested == nullptr) {
      ++out.warnings;
      continue;
    }
    out.fragments.push_back(Fragment{key, it->second.topic, nested->get()});
  }
  return out;
}

Message collector_step(const std::map<std::string, NodeObservation>& latest, double now, double stale_limit) {
  Message m;
  StrList stale, updated;
  for (const auto& [node, obs] : latest) {
    m.set(node, obs.state);
    if (now - obs.time > stale_limit) {
      stale.push_back(node);
    }
    if (obs.updated) {
      updated.push_back(node);
    }
  }
  m.set("stale", Value{std::move(stale)});
  m.set("updated", Value{std::move(updated)});
  return m;
}

Distributor::Distributor(Bus& bus, const DistributorPlan& plan) : plan_(plan) {
  const auto domain = bus.domain(plan.domain);
  in_ = bus.subscribe(domain, plan.input.topic, plan.input.schema, plan.input.qos, NodeId{plan.name});
  for (const auto& [node, t] : plan.outputs) {
    out_.emplace(node, bus.advertise(domain, t.topic, t.schema, t.qos, NodeId{plan.name}));
  }
}

std::size_t Distributor::tick() {
  std::size_t published = 0;
  for (const auto& m : in_.poll()) {
    auto step = distributor_step(m, plan_.outputs);
    warnings_ += step.warnings;
    for (const auto& f : step.fragments) {
      out_.at(f.node).publish(f.command);
      ++published;
    }
  }
  return published;
}

Collector::Collector(Bus& bus, const CollectorPlan& plan) : plan_(plan) {
  const auto domain = bus.domain(plan.domain);
  for (const auto& [node, t] : plan.inputs) {
    in_.emplace(node, bus.subscribe(domain, t.topic, t.schema, t.qos, NodeId{plan.name}));
  }
  out_ = bus.advertise(domain, plan.output.topic, plan.output.schema, plan.output.qos, NodeId{plan.name});
}

void Collector::tick(double now) {
  for (auto& [node, sub] : in_) {
    auto msgs = sub.poll();
    if (!msgs.empty()) {
      latest_[node] = NodeObservation{std::move(msgs.back()), now, true};
    }
  }
  out_.publish(collector_step(latest_, now));
  for (auto& [_, obs] : latest_) {
    obs.updated = false;
  }
}

}  // namespace cellbus
