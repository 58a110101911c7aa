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

#include "cellbus/controller.hpp"

#include <algorithm>

#include "cellbus/errors.hpp"

namespace cellbus {

namespace {

std::string join(const std::vector<std::string>& items) {
  if (items.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out += ',';
    out += items[i];
  }
  return out;
}

}  // namespace

Controller::Controller(Model model, const SchemaRegistry& registry, ControllerOptions options)
    : model_(std::move(model)),
      registry_(registry),
      options_(options),
      supervisor_(synthesize_guards(model_, model_.initial_state())),
      estimator_(model_),
      state_(model_.initial_state()),
      ops_(model_.operations.size()) {}

bool Controller::finished() const {
  return std::all_of(ops_.begin(), ops_.end(), [](const OpState& o) { return o.status == OperationStatus::Done; });
}

std::vector<std::string> Controller::drain_log() {
  std::vector<std::string> out;
  out.swap(log_);
  return out;
}

bool Controller::echoed(const Ability& ability) const {
  if (!ability.command) return false;
  auto it = latest_.find(ability.command->node);
  if (it == latest_.end() || !it->second.message.has("echo")) return false;
  try {
    return echo_matches(registry_, it->second.schema, it->second.message, ability.command->schema,
                        ability.command->message);
  } catch (const NoEchoField&) {
    return false;
  }
}

EmittedCommand Controller::emit(std::size_t op, std::size_t ability, bool first) const {
  const Ability& a = model_.abilities[ability];
  return EmittedCommand{model_.operations[op].name, a.name, a.command->node, a.command->schema,
                        a.command->message, first, a.collaborative};
}

std::vector<EmittedCommand> Controller::tick(std::uint64_t tick, const std::vector<Observation>& observations) {
  for (const auto& obs : observations) latest_[obs.source] = obs;
  state_ = estimator_.update(observations, state_);
  const std::string stamp = std::to_string(tick);

  std::vector<EmittedCommand> out;
  std::set<std::string> busy;

  for (std::size_t i = 0; i < ops_.size(); ++i) {
    OpState& op = ops_[i];
    if (op.status == OperationStatus::Done) continue;
    if (op.status == OperationStatus::Idle && !model_.operations[i].precondition.eval(state_)) continue;
    if (model_.operations[i].goal.eval(state_)) {
      op.status = OperationStatus::Done;
      op.in_flight.reset();
      log_.push_back("done " + stamp + " " + model_.operations[i].name + " " + model_.format(state_));
      continue;
    }
    if (!op.in_flight) continue;
    const Ability& a = model_.abilities[*op.in_flight];
    if (a.completion.eval(state_, echoed(a))) {
      op.in_flight.reset();
      continue;
    }
    busy.insert(a.command->node);
    out.push_back(emit(i, *op.in_flight, false));
  }

  for (std::size_t i = 0; i < ops_.size(); ++i) {
    OpState& op = ops_[i];
    const auto& spec = model_.operations[i];
    if (op.status == OperationStatus::Done || op.in_flight) continue;
    if (!spec.precondition.eval(state_)) {
      op.no_plan = 0;
      continue;
    }
    PlanResult r = plan(model_, &supervisor_, state_, spec.goal, options_.horizon);
    if (!r.found()) {
      if (op.last_plan) {
        log_.push_back("plan " + stamp + " " + spec.name + " " +
                       (r.status == PlanStatus::Unreachable ? "unreachable" : "horizon"));
        op.last_plan.reset();
      }
      if (++op.no_plan > options_.stuck_limit) throw OperationStuck(spec.name);
      continue;
    }
    op.no_plan = 0;
    if (!op.last_plan || *op.last_plan != r.plan.steps) {
      log_.push_back("plan " + stamp + " " + spec.name + " " + join(r.plan.steps));
      op.last_plan = r.plan.steps;
    }
    if (r.plan.steps.empty()) continue;
    std::size_t first = 0;
    while (model_.abilities[first].name != r.plan.steps.front()) ++first;
    const std::string& node = model_.abilities[first].command->node;
    if (busy.count(node) != 0) continue;
    busy.insert(node);
    if (op.status == OperationStatus::Idle) {
      op.status = OperationStatus::Running;
      log_.push_back("start " + stamp + " " + spec.name + " " + model_.format(state_));
    }
    op.in_flight = first;
    out.push_back(emit(i, first, true));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ControllerPort

ControllerPort::ControllerPort(Bus& bus, const TopologyPlan& plan, const Model& model, const std::string& owner)
    : plan_(plan) {
  const NodeId me{owner};
  std::set<std::string> state_nodes;
  for (const auto& p : model.pipelines) {
    if (!p.source.node.empty()) state_nodes.insert(p.source.node);
  }
  std::set<std::string> command_nodes;
  for (const auto& a : model.abilities) {
    if (!a.command) continue;
    command_nodes.insert(a.command->node);
    state_nodes.insert(a.command->node);
  }

  for (const auto& node : command_nodes) {
    auto route = plan.controller_commands.find(node);
    if (route == plan.controller_commands.end()) throw UnresolvedReference(node);
    const auto& binding = plan.nodes.at(node);
    for (const auto& a : model.abilities) {
      if (a.command && a.command->node == node && role_interface(binding.node.role).command != a.command->schema) {
        throw ConfigError("ability '" + a.name + "' sends " + a.command->schema.name + " to node '" + node +
                          "' of role " + std::string(to_string(binding.node.role)));
      }
    }
    const auto& t = route->second.topic;
    if (commands_.count(t) == 0) {
      commands_.emplace(t, bus.advertise(bus.domain(t.domain), t.topic, t.schema, t.qos, me));
    }
  }

  std::map<TopicEntry, StateLane> lanes;
  for (const auto& node : state_nodes) {
    auto route = plan.controller_states.find(node);
    if (route == plan.controller_states.end()) throw UnresolvedReference(node);
    const auto schema = *role_interface(plan.nodes.at(node).node.role).state;
    for (const auto& p : model.pipelines) {
      if (p.source.node == node && p.source.schema != schema) {
        throw ConfigError("pipeline '" + p.target + "' reads " + p.source.schema.name + " from node '" + node +
                          "' which publishes " + schema.name);
      }
    }
    node_state_schema_[node] = schema;
    const auto& t = route->second.topic;
    auto it = lanes.find(t);
    if (it == lanes.end()) {
      StateLane lane;
      lane.sub = bus.subscribe(bus.domain(t.domain), t.topic, t.schema, t.qos, me);
      lane.unwrap = route->second.unwrap;
      lane.source = node;
      lane.schema = schema;
      it = lanes.emplace(t, std::move(lane)).first;
    }
    it->second.nodes.push_back(node);
  }
  for (const auto& p : model.pipelines) {
    if (!p.source.node.empty()) continue;
    TopicEntry t{p.source.domain, *p.source.topic, p.source.schema, QosProfile::state()};
    if (lanes.count(t) != 0) continue;
    StateLane lane;
    lane.sub = bus.subscribe(bus.domain(t.domain), t.topic, t.schema, t.qos, me);
    lane.source = p.source.key();
    lane.schema = p.source.schema;
    lanes.emplace(t, std::move(lane));
  }
  for (auto& [topic, lane] : lanes) states_.push_back(std::move(lane));
}

std::vector<Observation> ControllerPort::poll() {
  std::vector<Observation> out;
  for (auto& lane : states_) {
    for (auto& m : lane.sub.poll()) {
      if (lane.unwrap == StateUnwrap::Plain) {
        out.push_back(Observation{lane.source, lane.schema, std::move(m)});
        continue;
      }
      for (const auto& name : m.list("updated")) {
        if (std::find(lane.nodes.begin(), lane.nodes.end(), name) == lane.nodes.end() || !m.has(name)) continue;
        out.push_back(Observation{name, node_state_schema_.at(name), m.nested(name)});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Observation& a, const Observation& b) { return a.source < b.source; });
  return out;
}

void ControllerPort::publish(const std::vector<EmittedCommand>& commands) {
  std::vector<std::pair<TopicEntry, Message>> batch;
  for (const auto& c : commands) {
    const auto& route = plan_.controller_commands.at(c.node);
    const auto& hub = plan_.nodes.at(c.node).node.hub;
    if (route.wrap == CommandWrap::HubKey) {
      auto it = std::find_if(batch.begin(), batch.end(), [&](const auto& b) { return b.first == route.topic; });
      if (it != batch.end()) {
        it->second.set(c.node, c.command);
        continue;
      }
    }
    batch.emplace_back(route.topic, wrap_command(route, hub, c.node, c.command));
  }
  for (const auto& [topic, message] : batch) commands_.at(topic).publish(message);
}

}  // namespace cellbus
