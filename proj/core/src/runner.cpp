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

#include "cellbus/runner.hpp"

#include <fnmatch.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <set>

#include "cellbus/bridge.hpp"
#include "cellbus/controller.hpp"
#include "cellbus/errors.hpp"
#include "cellbus/nodes.hpp"
#include "text_util.hpp"

namespace cellbus {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool glob_match(const std::string& pattern, const std::string& text) {
  return fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

bool simulated(Role role) {
  return role != Role::Controller && role != Role::Distributor && role != Role::Collector;
}

/// Faults compiled against the live objects of one run.
class FaultDriver {
 public:
  FaultDriver(const std::vector<FaultSpec>& faults, std::vector<StaticBridge>& bridges,
              std::map<std::string, NodeRuntime>& nodes)
      : faults_(faults), bridges_(bridges), nodes_(nodes) {
    for (const auto& f : faults_) {
      if (f.kind == FaultSpec::Kind::Bridge) {
        const bool any = std::any_of(bridges_.begin(), bridges_.end(),
                                     [&](const StaticBridge& b) { return glob_match(f.target, b.id()); });
        if (!any) throw ConfigError("fault '" + f.str() + "' matches no bridge");
      } else if (f.kind == FaultSpec::Kind::Node && nodes_.count(f.target) == 0) {
        throw ConfigError("fault '" + f.str() + "' names no simulated node");
      } else if (f.kind == FaultSpec::Kind::Service && f.target != "mir") {
        throw ConfigError("fault '" + f.str() + "': the only service is 'mir'");
      }
    }
  }

  void apply(std::uint64_t tick, CellWorld& world) {
    for (auto& b : bridges_) {
      const bool down = std::any_of(faults_.begin(), faults_.end(), [&](const FaultSpec& f) {
        return f.kind == FaultSpec::Kind::Bridge && f.active(tick) && glob_match(f.target, b.id());
      });
      b.set_enabled(!down);
    }
    bool service_down = false;
    for (const auto& f : faults_) {
      if (f.kind == FaultSpec::Kind::Node) {
        auto& node = nodes_.at(f.target);
        if (tick == f.start) node.stop();
        if (tick == f.start + f.duration) node.restart(tick);
      } else if (f.kind == FaultSpec::Kind::Service && f.active(tick)) {
        service_down = true;
      }
    }
    world.mir.set_available(!service_down);
  }

  bool drop(std::uint64_t tick, const Endpoint& publisher, std::mt19937_64& rng) const {
    for (const auto& f : faults_) {
      if (f.kind == FaultSpec::Kind::Drop && f.active(tick) && publisher.topic.str() == f.target) {
        return unit_uniform(rng) < f.probability;
      }
    }
    return false;
  }

 private:
  const std::vector<FaultSpec>& faults_;
  std::vector<StaticBridge>& bridges_;
  std::map<std::string, NodeRuntime>& nodes_;
};

}  // namespace

RunResult run(const Scenario& sc, const RunOptions& options) {
  const TopologyMode mode = options.topology.value_or(sc.topology);
  const std::uint64_t seed = options.seed.value_or(sc.seed);
  const std::uint64_t max_ticks = options.max_ticks.value_or(sc.max_ticks);
  if (max_ticks == 0) throw ConfigError("max_ticks must be positive");
  std::vector<FaultSpec> faults = sc.faults;
  faults.insert(faults.end(), options.faults.begin(), options.faults.end());

  SchemaRegistry registry = sc.registry();
  const TopologyPlan plan = build_topology(sc.hubs, mode, options.topology_options);
  register_plan_schemas(registry, plan);

  Bus bus(registry, BusOptions{ClockMode::Deterministic, sc.tick_len, 1});
  std::set<DomainId> domains{plan.controller_domain};
  for (const auto& hub : sc.hubs) domains.insert(hub.domain);
  for (const auto& d : domains) bus.create_domain(d);

  std::string bus_log;
  bus.set_trace_sink([&bus_log](const TraceRecord& r) {
    bus_log += "b " + std::to_string(r.tick) + " " + r.domain.name + " " + r.topic.str() + " " + r.publisher.name +
               " " + r.subscriber.name + " " + hex64(detail::fnv1a(r.payload)) + "\n";
  });

  std::vector<StaticBridge> bridges;
  bridges.reserve(plan.bridges.size());
  for (const auto& b : plan.bridges) {
    bridges.emplace_back(bus, b.id, b.src, b.dst, b.topic.topic, b.topic.schema, b.topic.qos);
  }
  std::vector<Distributor> distributors;
  distributors.reserve(plan.distributors.size());
  for (const auto& d : plan.distributors) distributors.emplace_back(bus, d);
  std::vector<Collector> hub_collectors, central_collectors;
  for (const auto& c : plan.collectors) {
    (c.hub.empty() ? central_collectors : hub_collectors).emplace_back(bus, c);
  }

  CellWorld world;
  world.robots = sc.robots;
  for (const auto& ee : sc.effectors) world.effectors[ee] = EffectorLocation::Dock;
  if (!sc.mir.stations.empty()) world.mir = MirService(sc.mir.stations, sc.mir.start, sc.mir.speed);
  world.operator_model = OperatorModel(options.operator_script.value_or(sc.operator_script), seed);

  std::map<std::string, NodeRuntime> nodes;
  for (const auto& [name, binding] : plan.nodes) {
    if (simulated(binding.node.role)) nodes.try_emplace(name, bus, binding, 0);
  }

  Controller ctl(sc.model, registry);
  ControllerPort port(bus, plan, ctl.model());

  FaultDriver driver(faults, bridges, nodes);
  std::mt19937_64 drop_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uint64_t tick = 0;
  bus.set_drop_filter([&](const Endpoint& publisher, const Endpoint&) {
    return driver.drop(tick, publisher, drop_rng);
  });

  std::string world_log = "w 0 " + world.record() + "\n";
  std::string ctl_log;
  Outcome outcome = Outcome::Stuck;
  std::string reason = "max_ticks";
  std::uint64_t used = max_ticks;

  for (tick = 1; tick <= max_ticks; ++tick) {
    bus.tick();
    driver.apply(tick, world);
    world.activity.clear();
    const std::size_t fired = world.operator_model.fired().size();
    world.operator_model.step(world, tick, sc.tick_len);
    for (std::size_t i = fired; i < world.operator_model.fired().size(); ++i) {
      world_log += "o " + std::to_string(tick) + " " + std::string(to_string(world.operator_model.fired()[i].event)) +
                   "\n";
    }
    world.mir.step(sc.tick_len);

    std::vector<EmittedCommand> commands;
    try {
      commands = ctl.tick(tick, port.poll());
    } catch (const OperationStuck& e) {
      for (const auto& line : ctl.drain_log()) ctl_log += line + "\n";
      reason = "stuck " + e.operation();
      used = tick;
      break;
    }
    for (const auto& line : ctl.drain_log()) ctl_log += line + "\n";
    for (const auto& c : commands) {
      if (!c.first) continue;
      ctl_log += "emit " + std::to_string(tick) + " " + c.operation + " " + c.ability + " " + c.node +
                 (c.collaborative ? " collaborative" : "") + "\n";
    }
    if (auto spec = ctl.model().violated_spec(ctl.state())) {
      const auto& name = ctl.model().specs[*spec].name;
      ctl_log += "violation " + std::to_string(tick) + " " + name + " " + ctl.model().format(ctl.state()) + "\n";
      outcome = Outcome::SafetyViolation;
      reason = "spec " + name;
      used = tick;
      break;
    }
    port.publish(commands);

    for (std::size_t i = 0; i < bridges.size(); ++i) {
      if (plan.bridges[i].command_side) bridges[i].tick();
    }
    for (auto& d : distributors) d.tick();
    NodeContext ctx{world, tick, sc.tick_len};
    for (auto& [name, node] : nodes) node.tick(ctx);
    for (auto& c : hub_collectors) c.tick(bus.now());
    for (std::size_t i = 0; i < bridges.size(); ++i) {
      if (!plan.bridges[i].command_side) bridges[i].tick();
    }
    for (auto& c : central_collectors) c.tick(bus.now());
    world_log += "w " + std::to_string(tick) + " " + world.record() + "\n";

    if (ctl.finished()) {
      outcome = Outcome::Completed;
      reason = "all operations done";
      used = tick;
      break;
    }
  }
  bus.set_drop_filter(nullptr);
  bus.set_trace_sink(nullptr);

  std::string trace = "cellbus-trace 1\n[meta]\n";
  trace += "scenario " + sc.name + "\n";
  trace += "topology " + std::string(to_string(mode)) + "\n";
  trace += "seed " + std::to_string(seed) + "\n";
  trace += "max_ticks " + std::to_string(max_ticks) + "\n";
  trace += "topics " + std::to_string(plan.topics.size()) + "\n";
  for (const auto& f : faults) trace += "fault " + f.str() + "\n";
  trace += "[bus]\n" + bus_log;
  trace += "[world]\n" + world_log;
  trace += "[controller]\n" + ctl_log;
  trace += "[outcome]\n";
  trace += "outcome " + std::string(to_string(outcome)) + "\n";
  trace += "reason " + reason + "\n";
  trace += "ticks " + std::to_string(used) + "\n";
  trace += "checksum " + hex64(detail::fnv1a(trace)) + "\n";

  RunResult result{derive_report(trace), std::move(trace)};
  if (options.trace_path) {
    std::ofstream out(*options.trace_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + options.trace_path->string());
    out << result.trace;
    result.report.trace_path = options.trace_path->string();
  }
  return result;
}

}  // namespace cellbus
