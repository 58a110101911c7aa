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

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cellbus/bridge.hpp"
#include "cellbus/bus.hpp"
#include "cellbus/schema.hpp"

namespace cellbus {

enum class Role {
  Mover,
  PoseSaver,
  SmartTool,
  Translator,
  RfidCam,
  Operator,
  Dock,
  MirSuite,
  Controller,
  Distributor,
  Collector,
};

std::string_view to_string(Role role);
/// Throws ConfigError.
Role parse_role(std::string_view text);

/// Command and state schemas a role speaks; either may be absent.
struct RoleInterface {
  std::optional<SchemaId> command;
  std::optional<SchemaId> state;
};
RoleInterface role_interface(Role role);

struct NodeDescriptor {
  std::string name;
  Role role = Role::Mover;
  double period = 0.1;
  std::string hub;
  std::map<std::string, std::string> params;  // role-specific, e.g. robot=tars
};

enum class GatewayKind { Direct, DistributorCollector };

struct HubConfig {
  std::string id;
  std::string host;
  DomainId domain = DomainId::modern();
  bool bridged = false;
  std::optional<GatewayKind> gateway;  // overrides the mode in hub-oriented topologies
  std::vector<NodeDescriptor> nodes;
};

enum class TopologyMode { HubGateway, HubDirect, NodeTypeDirect, NodeTypeCollector };

std::string_view to_string(TopologyMode mode);
/// Accepts hub-gateway, hub-direct, node-type, node-type-collector.
std::optional<TopologyMode> parse_topology(std::string_view text);
inline constexpr TopologyMode kAllTopologies[] = {TopologyMode::HubGateway, TopologyMode::HubDirect,
                                                  TopologyMode::NodeTypeDirect,
                                                  TopologyMode::NodeTypeCollector};

struct TopologyOptions {
  /// HubDirect only: one HubCommand topic per hub that every node reads and
  /// filters by its own key, instead of node-dedicated command topics.
  bool hub_direct_shared_topic = false;
};

inline constexpr double kStaleLimit = 2.0;

/// How a command for one node leaves the controller, and how a node finds
/// its own commands on its command topic.
enum class CommandWrap {
  Plain,     // the bare command
  HubKey,    // field <node> of a HubCommand
  TypeFlag,  // Typed wrapper carrying (hub_id, robot_name)
};

/// How a node's state reaches the controller.
enum class StateUnwrap {
  Plain,  // the bare state message
  Keyed,  // field <node> of a HubState / collector state, gated by `updated`
};

struct TopicEntry {
  DomainId domain;
  TopicName topic = TopicName::parse("/unset");
  SchemaId schema;
  QosProfile qos;

  auto operator<=>(const TopicEntry& o) const {
    if (auto c = domain <=> o.domain; c != 0) return c;
    return topic <=> o.topic;
  }
  bool operator==(const TopicEntry& o) const { return domain == o.domain && topic == o.topic; }
};

struct CommandRoute {
  TopicEntry topic;
  CommandWrap wrap = CommandWrap::Plain;
};

struct StateRoute {
  TopicEntry topic;
  StateUnwrap unwrap = StateUnwrap::Plain;
};

struct NodeBinding {
  NodeDescriptor node;
  DomainId domain;
  std::optional<CommandRoute> command;  // node side
  std::optional<TopicEntry> state;      // node side
  bool controllable = false;            // reachable from the controller
};

struct DistributorPlan {
  std::string name;
  std::string hub;
  DomainId domain;
  TopicEntry input;
  std::map<std::string, TopicEntry> outputs;  // node -> node command topic
};

struct CollectorPlan {
  std::string name;
  std::string hub;  // empty for the central state collector
  DomainId domain;
  std::map<std::string, TopicEntry> inputs;  // node -> node state topic
  TopicEntry output;
};

struct BridgePlan {
  std::string id;
  std::string hub;
  DomainId src;
  DomainId dst;
  TopicEntry topic;
  bool command_side = true;
};

/// Everything a topology needs: topics, gateways, bridges, and the
/// controller's view of every reachable node.
struct TopologyPlan {
  TopologyMode mode = TopologyMode::HubGateway;
  TopologyOptions options;
  DomainId controller_domain = DomainId::modern();
  std::vector<HubConfig> hubs;
  std::vector<MessageSchema> generated_schemas;
  std::set<TopicEntry> topics;
  std::map<std::string, NodeBinding> nodes;
  std::vector<DistributorPlan> distributors;
  std::vector<CollectorPlan> collectors;
  std::vector<BridgePlan> bridges;
  std::map<std::string, CommandRoute> controller_commands;  // node -> route
  std::map<std::string, StateRoute> controller_states;      // node -> route

  /// Topics the controller itself publishes or subscribes.
  std::set<TopicEntry> controller_topics() const;
  std::size_t gateway_count() const { return distributors.size() + collectors.size(); }
  BridgeManifest manifest() const;
  /// Line-oriented description of the plan.
  std::string report() const;
};

/// Throws ConfigError on duplicate or malformed names and broken
/// domain/bridging combinations.
TopologyPlan build_topology(const std::vector<HubConfig>& hubs, TopologyMode mode,
                            TopologyOptions options = {});

/// Registers the HubCommand/HubState/Typed schemas a plan generated.
void register_plan_schemas(SchemaRegistry& registry, const TopologyPlan& plan);

SchemaId hub_command_schema(const std::string& hub);
SchemaId hub_state_schema(const std::string& hub);
SchemaId typed_schema(const SchemaId& command);
inline const SchemaId kCollectorStateSchema{"CollectorState"};

/// Wraps a node command for its route.
Message wrap_command(const CommandRoute& route, const std::string& hub, const std::string& node,
                     const Message& command);

struct Fragment {
  std::string node;
  TopicName topic = TopicName::parse("/unset");
  Message command;
};

struct DistributorOutput {
  std::vector<Fragment> fragments;
  std::size_t warnings = 0;
};

/// Splits a HubCommand into one fragment per present key. Keys that name no
/// node of the hub are dropped and counted as warnings.
DistributorOutput distributor_step(const Message& hub_command, const std::map<std::string, TopicEntry>& outputs);

struct NodeObservation {
  Message state;
  double time = 0.0;     // logical time of the last report
  bool updated = false;  // reported since the previous collector publication
};

/// Latest state per node, plus `stale` (silent for more than `stale_limit`)
/// and `updated` name lists.
Message collector_step(const std::map<std::string, NodeObservation>& latest, double now,
                       double stale_limit = kStaleLimit);

/// Distributor gateway actor.
class Distributor {
 public:
  Distributor(Bus& bus, const DistributorPlan& plan);
  std::size_t tick();
  std::size_t warnings() const { return warnings_; }
  const DistributorPlan& plan() const { return plan_; }

 private:
  DistributorPlan plan_;
  Subscriber in_;
  std::map<std::string, Publisher> out_;
  std::size_t warnings_ = 0;
};

/// Collector gateway actor; publishes once per tick whether or not anything
/// changed.
class Collector {
 public:
  Collector(Bus& bus, const CollectorPlan& plan);
  void tick(double now);
  const CollectorPlan& plan() const { return plan_; }

 private:
  CollectorPlan plan_;
  std::map<std::string, Subscriber> in_;
  std::map<std::string, NodeObservation> latest_;
  Publisher out_;
};

}  // namespace cellbus
