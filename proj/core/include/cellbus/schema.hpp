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

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellbus/message.hpp"

namespace cellbus {

struct SchemaId {
  std::string name;

  auto operator<=>(const SchemaId&) const = default;
};

enum class FieldKind { Str, Bool, F32, StrList, Nested };

struct FieldType {
  FieldKind kind = FieldKind::Str;
  SchemaId nested;  // only meaningful for FieldKind::Nested

  bool operator==(const FieldType&) const = default;
};

struct Bound {
  double value = 0.0;
  bool inclusive = true;

  bool operator==(const Bound&) const = default;
};

/// Numeric interval constraint for F32 fields.
struct Range {
  std::optional<Bound> lower;
  std::optional<Bound> upper;

  bool contains(double x) const;
  std::string describe() const;
  bool operator==(const Range&) const = default;
};

struct FieldSpec {
  std::string name;
  FieldType type;
  std::optional<Range> range;
  bool optional = false;

  bool operator==(const FieldSpec&) const = default;
};

/// `flag_field == (age_field <= window)` must hold on every valid message.
struct FreshnessRule {
  std::string age_field;
  std::string flag_field;
  double window = 1.0;

  bool operator==(const FreshnessRule&) const = default;
};

struct MessageSchema {
  SchemaId id;
  std::vector<FieldSpec> fields;
  std::optional<FreshnessRule> freshness;

  const FieldSpec* field(std::string_view name) const;
  bool operator==(const MessageSchema&) const = default;
};

enum class ValidationReason { Missing, WrongType, OutOfRange, NotFinite, UnknownField, Inconsistent };

std::string_view to_string(ValidationReason reason);

struct ValidationError {
  std::string field;  // dotted path for nested fields
  ValidationReason reason = ValidationReason::Missing;
  std::string detail;

  std::string describe() const;
  bool operator==(const ValidationError&) const = default;
};

/// Name -> schema table. Nested schemas must be registered before the
/// schemas that reference them, which also rules out cycles.
class SchemaRegistry {
 public:
  /// Idempotent for identical definitions. Throws SchemaConflict,
  /// UnknownNested or InvalidSchema.
  SchemaId register_schema(MessageSchema schema);

  bool contains(const SchemaId& id) const;
  const MessageSchema& get(const SchemaId& id) const;
  std::vector<SchemaId> ids() const;

  /// Returns the first offending field in schema field order, or nullopt.
  std::optional<ValidationError> validate(const SchemaId& id, const Message& message) const;

 private:
  std::optional<ValidationError> validate_into(const MessageSchema& schema, const Message& message,
                                               const std::string& prefix) const;

  std::map<SchemaId, MessageSchema> schemas_;
};

/// Parses the declarative schema text format:
///
///   schema CommandMover
///   field speed_scal f32 (0,1]
///   field echo CommandMover
///   field note str optional
///   freshness t_plus fresh_msg 1.0
std::vector<MessageSchema> parse_schema_text(std::string_view text, const std::string& filename);
std::string format_schema_text(const std::vector<MessageSchema>& schemas);

/// The Command/State families used by the bundled cell resources.
std::string_view standard_schema_text();
void register_standard_schemas(SchemaRegistry& registry);

namespace schemas {
inline const SchemaId kCommandMover{"CommandMover"};
inline const SchemaId kStateMover{"StateMover"};
inline const SchemaId kCommandPoseSaver{"CommandPoseSaver"};
inline const SchemaId kStatePoseSaver{"StatePoseSaver"};
inline const SchemaId kCommandTool{"CommandTool"};
inline const SchemaId kStateTool{"StateTool"};
inline const SchemaId kCommandOperator{"CommandOperator"};
inline const SchemaId kStateOperator{"StateOperator"};
inline const SchemaId kSafetyStatus{"SafetyStatus"};
inline const SchemaId kStateDock{"StateDock"};
inline const SchemaId kStateMirSuite{"StateMirSuite"};
}  // namespace schemas

/// Threshold that makes both published example rows consistent:
/// t_plus 0.8 -> fresh, t_plus 38 -> stale.
inline constexpr double kFreshWindow = 1.0;

/// True iff the state's `echo` field equals `command` field-for-field.
/// Throws NoEchoField unless `state_schema` has an echo field nesting
/// `command_schema`.
bool echo_matches(const SchemaRegistry& registry, const SchemaId& state_schema, const Message& state,
                  const SchemaId& command_schema, const Message& command);

}  // namespace cellbus
