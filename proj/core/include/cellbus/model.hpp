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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellbus/bus.hpp"
#include "cellbus/message.hpp"
#include "cellbus/schema.hpp"

namespace cellbus {

enum class VarKind { Bool, Int, Enum };

/// Finite-domain controller variable. Values are stored as ints: 0/1 for
/// Bool, the value itself for Int, the label index for Enum.
struct Variable {
  std::string name;
  VarKind kind = VarKind::Bool;
  int lo = 0;
  int hi = 1;
  std::vector<std::string> labels;
  int initial = 0;

  std::size_t domain_size() const { return static_cast<std::size_t>(hi - lo + 1); }
  bool in_domain(int v) const { return v >= lo && v <= hi; }
  std::string format(int v) const;
  /// Parses a literal of this variable's kind.
  std::optional<int> parse(std::string_view literal) const;
};

/// Total assignment, indexed like Model::variables.
using ControlState = std::vector<int>;

/// Boolean expression over a ControlState. `echoed` is an atom supplied by
/// the caller at evaluation time (false when absent).
class Predicate {
 public:
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge };

  Predicate();  // constant true

  struct Node;

  static Predicate constant(bool value);
  static Predicate compare(std::size_t var, Op op, int value);
  static Predicate echoed();
  static Predicate negate(Predicate p);
  static Predicate all_of(std::vector<Predicate> parts);
  static Predicate any_of(std::vector<Predicate> parts);

  bool eval(const ControlState& state, bool echoed = false) const;
  bool uses_echo() const;
  /// Variables referenced.
  std::vector<std::size_t> variables() const;

 private:
  explicit Predicate(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Effect {
  enum class Op { Set, Add, Sub };
  std::size_t var = 0;
  Op op = Op::Set;
  int value = 0;
};

struct CommandTemplate {
  std::string node;
  SchemaId schema;
  Message message;
};

struct Ability {
  std::string name;
  Predicate guard;
  std::optional<CommandTemplate> command;
  std::vector<Effect> effects;
  /// Defaults to `echoed && <effects hold>`.
  Predicate completion;
  bool controllable = true;
  bool collaborative = false;
};

struct Specification {
  std::string name;
  Predicate forbidden;
};

struct OperationSpec {
  std::string name;
  Predicate precondition;
  Predicate goal;
};

struct PipelineSource {
  std::string node;  // logical node; empty when bound to a topic
  DomainId domain;
  std::optional<TopicName> topic;
  SchemaId schema;

  /// Observation key: the node name, or "<domain>:<topic>".
  std::string key() const;
};

struct Stage {
  enum class Kind { ExtractField, Aggregate, Discretize };
  enum class Fn { Any, All, Latest, Count };

  Kind kind = Kind::ExtractField;
  std::string path;             // ExtractField
  Fn fn = Fn::Latest;           // Aggregate
  std::size_t window = 1;       // Aggregate
  std::vector<std::pair<double, std::string>> thresholds;  // Discretize: value <= bound -> label
  std::string otherwise;        // Discretize
};

struct Pipeline {
  PipelineSource source;
  std::vector<Stage> stages;
  std::string target;  // variable name
};

/// Controller model: variables, pipelines, abilities, specifications and
/// operations.
struct Model {
  std::vector<Variable> variables;
  std::vector<Pipeline> pipelines;
  std::vector<Ability> abilities;
  std::vector<Specification> specs;
  std::vector<OperationSpec> operations;

  std::optional<std::size_t> find_variable(std::string_view name) const;
  const Variable& variable(std::string_view name) const;
  const Ability* find_ability(std::string_view name) const;
  ControlState initial_state() const;
  /// "name=value" pairs separated by spaces, in declaration order.
  std::string format(const ControlState& state) const;
  /// Index of the first spec violated by `state`, if any.
  std::optional<std::size_t> violated_spec(const ControlState& state) const;

  /// Applies effects; nullopt when a result leaves its variable's domain.
  std::optional<ControlState> apply(const Ability& ability, const ControlState& state) const;
  Predicate effects_hold(const Ability& ability) const;
};

/// Parses a predicate written over the model's variables:
///   expr := or ; or := and ('||' and)* ; and := unary ('&&' unary)*
///   unary := '!' unary | '(' expr ')' | 'true' | 'false' | 'echoed'
///          | var | var op literal      op := == != < <= > >=
/// Throws ModelError.
Predicate parse_predicate(std::string_view text, const std::vector<Variable>& variables);

/// Parses the line-oriented model format. Command templates and pipeline
/// fields are checked against `registry`. Throws ParseError, carrying the
/// line, on malformed, unresolved or inconsistent declarations.
///
///   var ready bool = false
///   var count int 0 3
///   var pose enum HOME,DOCK,UNKNOWN = UNKNOWN
///   pipeline pose from tars StateMover field actual_pose
///   pipeline zone from rfidcam SafetyStatus field zone_occupied aggregate any 3
///   pipeline age from saver StatePoseSaver field t_plus discretize <=1.0:fresh else:stale
///   ability go_home
///     guard pose != HOME
///     command tars CommandMover action=MOVEJ pose_name=HOME ...
///     effect pose = HOME
///   end
///   spec no_dock_when_busy pose == DOCK && count > 0
///   operation home
///     pre true
///     goal pose == HOME
///   end
Model parse_model(std::string_view text, const std::string& filename, const SchemaRegistry& registry);

}  // namespace cellbus
