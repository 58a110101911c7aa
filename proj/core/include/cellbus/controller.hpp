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

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cellbus/bus.hpp"
#include "cellbus/hub.hpp"
#include "cellbus/model.hpp"

namespace cellbus {

// ---------------------------------------------------------------------------
// State estimation

/// A state message attributed to a pipeline source key.
struct Observation {
  std::string source;
  SchemaId schema;
  Message message;
};

/// Value flowing between pipeline stages. Counts are carried as doubles.
using Sample = std::variant<bool, double, std::string>;

/// Runs the model's pipelines. Owns the aggregate windows, so one estimator
/// must see every observation in order.
class Estimator {
 public:
  explicit Estimator(const Model& model);
  Estimator(const Estimator&) = delete;
  Estimator& operator=(const Estimator&) = delete;

  /// Variables fed by `observations` are overwritten in order; all others
  /// keep their previous value.
  ControlState update(const std::vector<Observation>& observations, ControlState prev);
  /// Samples that produced no value of their target variable (e.g. an
  /// unknown enum label).
  std::size_t rejected() const { return rejected_; }

 private:
  struct Lane {
    const Pipeline* pipeline = nullptr;
    std::size_t target = 0;
    std::vector<std::deque<Sample>> windows;  // one per Aggregate stage
  };

  std::optional<Sample> run(Lane& lane, const Message& message);
  std::optional<int> convert(const Variable& var, const Sample& sample) const;

  const Model& model_;
  std::vector<Lane> lanes_;
  std::size_t rejected_ = 0;
};

ControlState estimate_state(Estimator& estimator, const std::vector<Observation>& observations,
                            const ControlState& prev);

/// One ExtractField pipeline per scalar field of `schema` (nested records
/// are expanded one level; lists are skipped). Targets are named
/// <topic path with '/' as '_'>_<field>, e.g. cell_tars_state_moving.
std::vector<Pipeline> generate_pipelines(const SchemaRegistry& registry, const SchemaId& schema,
                                         const DomainId& domain, const TopicName& topic);

// ---------------------------------------------------------------------------
// Supervisor synthesis

/// Mixed-radix enumeration of all total states of a model.
class StateSpace {
 public:
  explicit StateSpace(const std::vector<Variable>& variables);
  /// Number of states, saturated at SIZE_MAX.
  std::size_t size() const { return size_; }
  std::size_t index(const ControlState& state) const;
  ControlState decode(std::size_t index) const;

 private:
  std::vector<int> lo_;
  std::vector<std::size_t> radix_;
  std::size_t size_ = 1;
};

inline constexpr std::size_t kMaxExplicitStates = std::size_t{1} << 20;

/// Result of synthesis: the extended forbidden set and, per controllable
/// ability, the source states whose transition it must refuse.
struct Supervisor {
  std::optional<StateSpace> space;  // absent when there are no specs
  std::vector<bool> forbidden;      // extended forbidden set, indexed by state
  std::size_t forbidden_size = 0;
  std::vector<std::vector<bool>> blocked;  // per ability; empty when never blocked

  bool is_forbidden(const ControlState& state) const;
  /// True unless synthesis disabled `ability` in `state`.
  bool allows(std::size_t ability, const ControlState& state) const;
};

/// Least fixed point of spec-forbidden states plus states from which an
/// uncontrollable ability leads into the set; each controllable ability is
/// refused exactly where its successor lies in the set. Throws
/// InitialForbidden and ModelError (state space above `max_states`).
Supervisor synthesize_guards(const Model& model, const ControlState& initial,
                             std::size_t max_states = kMaxExplicitStates);

/// Guard holds, effects stay in range, and the supervisor allows it.
bool ability_enabled(const Model& model, const Supervisor* supervisor, std::size_t ability,
                     const ControlState& state);

// ---------------------------------------------------------------------------
// Planning

inline constexpr int kDefaultHorizon = 20;

struct Plan {
  std::vector<std::string> steps;
  int horizon = kDefaultHorizon;
};

enum class PlanStatus { Found, HorizonExceeded, Unreachable };

struct PlanResult {
  PlanStatus status = PlanStatus::Found;
  Plan plan;

  bool found() const { return status == PlanStatus::Found; }
};

/// Breadth-first search over controllable abilities, expanded in name order,
/// so the result is the lexicographically smallest among the shortest plans.
/// HorizonExceeded means the search was cut at `horizon` with states left to
/// explore; Unreachable means the reachable set holds no goal state.
PlanResult plan(const Model& model, const Supervisor* supervisor, const ControlState& state, const Predicate& goal,
                int horizon = kDefaultHorizon);

// ---------------------------------------------------------------------------
// Controller

inline constexpr int kStuckLimit = 100;

struct ControllerOptions {
  int horizon = kDefaultHorizon;
  int stuck_limit = kStuckLimit;
};

struct EmittedCommand {
  std::string operation;
  std::string ability;
  std::string node;
  SchemaId schema;
  Message command;
  bool first = false;  // first emission of this ability instance
  bool collaborative = false;
};

enum class OperationStatus { Idle, Running, Done };

/// Receding-horizon controller. Each tick: estimate, retire finished
/// operations (an idle one only while its precondition holds) and completed
/// abilities, re-emit in-flight commands, then plan
/// for every active operation without one and emit the first step when its
/// node is free. Operations are served in declaration order.
class Controller {
 public:
  /// Runs synthesis; throws InitialForbidden or ModelError.
  Controller(Model model, const SchemaRegistry& registry, ControllerOptions options = {});
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  /// Throws OperationStuck after `stuck_limit` consecutive NoPlan ticks of
  /// an active operation.
  std::vector<EmittedCommand> tick(std::uint64_t tick, const std::vector<Observation>& observations);

  const Model& model() const { return model_; }
  const Supervisor& supervisor() const { return supervisor_; }
  const ControlState& state() const { return state_; }
  OperationStatus status(std::size_t operation) const { return ops_[operation].status; }
  bool finished() const;
  /// Plan dumps ("plan <tick> <op> a,b") and operation boundaries
  /// ("start|done <tick> <op> <state>") since the last call.
  std::vector<std::string> drain_log();

 private:
  struct OpState {
    OperationStatus status = OperationStatus::Idle;
    std::optional<std::size_t> in_flight;
    int no_plan = 0;
    std::optional<std::vector<std::string>> last_plan;
  };

  bool echoed(const Ability& ability) const;
  EmittedCommand emit(std::size_t op, std::size_t ability, bool first) const;

  Model model_;
  const SchemaRegistry& registry_;
  ControllerOptions options_;
  Supervisor supervisor_;
  Estimator estimator_;
  ControlState state_;
  std::vector<OpState> ops_;
  std::map<std::string, Observation> latest_;
  std::vector<std::string> log_;
};

/// Connects a controller to the bus through a topology plan: subscribes to
/// the controller's state routes (unwrapping keyed hub or collector states,
/// gated by their `updated` list) and publishes commands on the command
/// routes, merging all commands for one HubCommand topic into one message
/// per tick.
class ControllerPort {
 public:
  /// Throws UnresolvedReference when the model names a node the plan cannot
  /// reach, ConfigError on schema mismatches.
  ControllerPort(Bus& bus, const TopologyPlan& plan, const Model& model, const std::string& owner = "sp");

  std::vector<Observation> poll();
  void publish(const std::vector<EmittedCommand>& commands);

 private:
  struct StateLane {
    Subscriber sub;
    StateUnwrap unwrap = StateUnwrap::Plain;
    std::vector<std::string> nodes;  // Keyed: nodes read from this topic
    std::string source;              // Plain: observation source key
    SchemaId schema;
  };

  const TopologyPlan& plan_;
  std::vector<StateLane> states_;
  std::map<TopicEntry, Publisher> commands_;
  std::map<std::string, SchemaId> node_state_schema_;
};

}  // namespace cellbus
