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

#include "cellbus/schema.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

bool Range::contains(double x) const {
  if (lower && (lower->inclusive ? x < lower->value : x <= lower->value)) {
    return false;
  }
  if (upper && (upper->inclusive ? x > upper->value : x >= upper->value)) {
    return false;
  }
  return true;
}

std::string Range::describe() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  if (lower && upper) {
    return std::string(lower->inclusive ? "[" : "(") + num(lower->value) + "," + num(upper->value) +
           (upper->inclusive ? "]" : ")");
  }
  if (lower) {
    return (lower->inclusive ? ">=" : ">") + num(lower->value);
  }
  if (upper) {
    return (upper->inclusive ? "<=" : "<") + num(upper->value);
  }
  return "any";
}

const FieldSpec* MessageSchema::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) {
      return &f;
    }
  }
  return nullptr;
}

std::string_view to_string(ValidationReason reason) {
  switch (reason) {
    case ValidationReason::Missing: return "missing";
    case ValidationReason::WrongType: return "wrong_type";
    case ValidationReason::OutOfRange: return "out_of_range";
    case ValidationReason::NotFinite: return "not_finite";
    case ValidationReason::UnknownField: return "unknown_field";
    case ValidationReason::Inconsistent: return "inconsistent";
  }
  return "?";
}

std::string ValidationError::describe() const {
  std::string s = field + ": " + std::string(to_string(reason));
  if (!detail.empty()) {
    s += " (" + detail + ")";
  }
  return s;
}

SchemaId SchemaRegistry::register_schema(MessageSchema schema) {
  if (schema.id.name.empty()) {
    throw InvalidSchema("schema without a name");
  }
  std::set<std::string, std::less<>> names;
  for (const auto& f : schema.fields) {
    if (f.name.empty() || !names.insert(f.name).second) {
      throw InvalidSchema("schema " + schema.id.name + ": duplicate or empty field '" + f.name + "'");
    }
    if (f.type.kind == FieldKind::Nested && !contains(f.type.nested)) {
      throw UnknownNested("schema " + schema.id.name + ": field '" + f.name +
                          "' nests unregistered schema " + f.type.nested.name);
    }
    if (f.range && f.type.kind != FieldKind::F32) {
      throw InvalidSchema("schema " + schema.id.name + ": range on non-f32 field '" + f.name + "'");
    }
  }
  if (schema.freshness) {
    const FieldSpec* age = schema.field(schema.freshness->age_field);
    const FieldSpec* flag = schema.field(schema.freshness->flag_field);
    if (age == nullptr || age->type.kind != FieldKind::F32 || flag == nullptr ||
        flag->type.kind != FieldKind::Bool) {
      throw InvalidSchema("schema " + schema.id.name + ": freshness rule needs an f32 and a bool field");
    }
  }
  if (auto it = schemas_.find(schema.id); it != schemas_.end()) {
    if (it->second == schema) {
      return schema.id;
    }
    throw SchemaConflict("schema " + schema.id.name + " already registered with a different shape");
  }
  SchemaId id = schema.id;
  schemas_.emplace(id, std::move(schema));
  return id;
}

bool SchemaRegistry::contains(const SchemaId& id) const { return schemas_.count(id) != 0; }

const MessageSchema& SchemaRegistry::get(const SchemaId& id) const {
  auto it = schemas_.find(id);
  if (it == schemas_.end()) {
    throw UnknownSchema("unknown schema " + id.name);
  }
  return it->second;
}

std::vector<SchemaId> SchemaRegistry::ids() const {
  std::vector<SchemaId> out;
  out.reserve(schemas_.size());
  for (const auto& [id, _] : schemas_) {
    out.push_back(id);
  }
  return out;
}

std::optional<ValidationError> SchemaRegistry::validate(const SchemaId& id, const Message& message) const {
  return validate_into(get(id), message, "");
}

std::optional<ValidationError> SchemaRegistry::validate_into(const MessageSchema& schema,
                                                             const Message& message,
                                                             const std::string& prefix) const {
  for (const auto& f : schema.fields) {
    const std::string path = prefix + f.name;
    const Value* v = message.find(f.name);
    if (v == nullptr) {
      if (f.optional) {
        continue;
      }
      return ValidationError{path, ValidationReason::Missing, ""};
    }
    switch (f.type.kind) {
      case FieldKind::Str:
        if (!std::holds_alternative<std::string>(*v)) {
          return ValidationError{path, ValidationReason::WrongType, "expected str"};
        }
        break;
      case FieldKind::Bool:
        if (!std::holds_alternative<bool>(*v)) {
          return ValidationError{path, ValidationReason::WrongType, "expected bool"};
        }
        break;
      case FieldKind::StrList:
        if (!std::holds_alternative<StrList>(*v)) {
          return ValidationError{path, ValidationReason::WrongType, "expected str[]"};
        }
        break;
      case FieldKind::F32: {
        const float* x = std::get_if<float>(v);
        if (x == nullptr) {
          return ValidationError{path, ValidationReason::WrongType, "expected f32"};
        }
        if (!std::isfinite(*x)) {
          return ValidationError{path, ValidationReason::NotFinite, ""};
        }
        if (f.range && !f.range->contains(*x)) {
          return ValidationError{path, ValidationReason::OutOfRange, f.range->describe()};
        }
        break;
      }
      case FieldKind::Nested: {
        const auto* nested = std::get_if<NestedMessage>(v);
        if (nested == nullptr) {
          return ValidationError{path, ValidationReason::WrongType, "expected " + f.type.nested.name};
        }
        if (auto err = validate_into(get(f.type.nested), nested->get(), path + ".")) {
          return err;
        }
        break;
      }
    }
  }
  for (const auto& [name, _] : message.fields()) {
    if (schema.field(name) == nullptr) {
      return ValidationError{prefix + name, ValidationReason::UnknownField, ""};
    }
  }
  if (schema.freshness) {
    const auto& rule = *schema.freshness;
    const float age = message.f32(rule.age_field);
    const bool flag = message.boolean(rule.flag_field);
    if (flag != (age <= rule.window)) {
      return ValidationError{prefix + rule.flag_field, ValidationReason::Inconsistent,
                             "must equal " + rule.age_field + " <= window"};
    }
  }
  return std::nullopt;
}

namespace {

Range parse_range(const std::string& token, const std::string& file, std::size_t line) {
  auto number = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      double v = std::stod(std::string(s), &used);
      if (used != s.size()) {
        throw std::invalid_argument("trailing");
      }
      return v;
    } catch (const std::exception&) {
      throw ParseError(file, line, "bad number in range '" + token + "'");
    }
  };
  Range r;
  if (token.size() >= 5 && (token.front() == '(' || token.front() == '[') &&
      (token.back() == ')' || token.back() == ']')) {
    const auto comma = token.find(',');
    if (comma == std::string::npos) {
      throw ParseError(file, line, "bad range '" + token + "'");
    }
    r.lower = Bound{number(std::string_view(token).substr(1, comma - 1)), token.front() == '['};
    r.upper = Bound{number(std::string_view(token).substr(comma + 1, token.size() - comma - 2)),
                    token.back() == ']'};
    return r;
  }
  if (token.rfind(">=", 0) == 0) {
    r.lower = Bound{number(std::string_view(token).substr(2)), true};
  } else if (token.rfind('>', 0) == 0) {
    r.lower = Bound{number(std::string_view(token).substr(1)), false};
  } else if (token.rfind("<=", 0) == 0) {
    r.upper = Bound{number(std::string_view(token).substr(2)), true};
  } else if (token.rfind('<', 0) == 0) {
    r.upper = Bound{number(std::string_view(token).substr(1)), false};
  } else {
    throw ParseError(file, line, "unknown field modifier '" + token + "'");
  }
  return r;
}

std::string type_token(const FieldType& t) {
  switch (t.kind) {
    case FieldKind::Str: return "str";
    case FieldKind::Bool: return "bool";
    case FieldKind::F32: return "f32";
    case FieldKind::StrList: return "str[]";
    case FieldKind::Nested: return t.nested.name;
  }
  return "?";
}

}  // namespace

std::vector<MessageSchema> parse_schema_text(std::string_view text, const std::string& filename) {
  std::vector<MessageSchema> out;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto tokens = detail::tokenize(detail::strip_comment(raw));
    if (tokens.empty()) {
      continue;
    }
    const std::string& kw = tokens[0];
    if (kw == "schema") {
      if (tokens.size() != 2) {
        throw ParseError(filename, line_no, "expected: schema <name>");
      }
      out.push_back(MessageSchema{SchemaId{tokens[1]}, {}, std::nullopt});
      continue;
    }
    if (out.empty()) {
      throw ParseError(filename, line_no, "'" + kw + "' outside a schema block");
    }
    if (kw == "field") {
      if (tokens.size() < 3) {
        throw ParseError(filename, line_no, "expected: field <name> <type> [range] [optional]");
      }
      FieldSpec f;
      f.name = tokens[1];
      const std::string& t = tokens[2];
      if (t == "str") {
        f.type.kind = FieldKind::Str;
      } else if (t == "bool") {
        f.type.kind = FieldKind::Bool;
      } else if (t == "f32") {
        f.type.kind = FieldKind::F32;
      } else if (t == "str[]") {
        f.type.kind = FieldKind::StrList;
      } else {
        f.type = FieldType{FieldKind::Nested, SchemaId{t}};
      }
      for (std::size_t i = 3; i < tokens.size(); ++i) {
        if (tokens[i] == "optional") {
          f.optional = true;
        } else {
          f.range = parse_range(tokens[i], filename, line_no);
        }
      }
      out.back().fields.push_back(std::move(f));
    } else if (kw == "freshness") {
      if (tokens.size() != 4) {
        throw ParseError(filename, line_no, "expected: freshness <age_field> <flag_field> <window>");
      }
      try {
        out.back().freshness = FreshnessRule{tokens[1], tokens[2], std::stod(tokens[3])};
      } catch (const std::exception&) {
        throw ParseError(filename, line_no, "bad freshness window");
      }
    } else {
      throw ParseError(filename, line_no, "unknown keyword '" + kw + "'");
    }
  }
  return out;
}

std::string format_schema_text(const std::vector<MessageSchema>& schemas) {
  std::ostringstream os;
  for (const auto& s : schemas) {
    os << "schema " << s.id.name << "\n";
    for (const auto& f : s.fields) {
      os << "field " << f.name << " " << type_token(f.type);
      if (f.range) {
        os << " " << f.range->describe();
      }
      if (f.optional) {
        os << " optional";
      }
      os << "\n";
    }
    if (s.freshness) {
      os << "freshness " << s.freshness->age_field << " " << s.freshness->flag_field << " "
         << s.freshness->window << "\n";
    }
    os << "\n";
  }
  return os.str();
}

std::string_view standard_schema_text() {
  return R"(# Command / State families of the cell resources.
schema CommandMover
field action str
field robot_type str
field robot_name str
field pose_type str
field pose_name str
field speed_scal f32 (0,1]
field acc_scal f32 (0,1]
field goal_toll f32 >0

schema StateMover
field robot_name str
field fresh_msg bool
field t_plus f32 >=0
field got_reset bool
field error_list str[]
field echo CommandMover optional
field moving bool
field actual_pose str
freshness t_plus fresh_msg 1.0

schema CommandPoseSaver
field action str
field robot_type str
field robot_name str
field pose_type str
field pose_name str

schema StatePoseSaver
field robot_name str
field fresh_msg bool
field t_plus f32 >=0
field echo CommandPoseSaver optional
field done_action str
freshness t_plus fresh_msg 1.0

schema CommandTool
field action str
field tool_name str
field end_effector str
field target str
field count f32 >=0

schema StateTool
field tool_name str
field fresh_msg bool
field t_plus f32 >=0
field got_reset bool
field error_list str[]
field echo CommandTool optional
field attached str
field floating bool
field bolt_bitmap str
field filter_bitmap str
field bolts_tightened f32 >=0
field filters_tightened f32 >=0
field busy bool
field done_action str
freshness t_plus fresh_msg 1.0

schema CommandOperator
field action str
field operator_name str
field instruction str

schema StateOperator
field operator_name str
field fresh_msg bool
field t_plus f32 >=0
field got_reset bool
field error_list str[]
field echo CommandOperator optional
field instruction str
field ladder_placed bool
field bolts_placed bool
field filters_placed bool
field pipes_done bool
freshness t_plus fresh_msg 1.0

schema SafetyStatus
field operator_verified bool
field zone_occupied bool
field safeguard_stop bool

schema StateDock
field dock_name str
field docked str[]
field attached str

schema StateMirSuite
field position str
field moving bool
field battery f32 [0,100]
field mission_queue str[]
)";
}

void register_standard_schemas(SchemaRegistry& registry) {
  for (auto& s : parse_schema_text(standard_schema_text(), "<standard>")) {
    registry.register_schema(std::move(s));
  }
}

bool echo_matches(const SchemaRegistry& registry, const SchemaId& state_schema, const Message& state,
                  const SchemaId& command_schema, const Message& command) {
  const FieldSpec* echo = registry.get(state_schema).field("echo");
  if (echo == nullptr || echo->type.kind != FieldKind::Nested || echo->type.nested != command_schema) {
    throw NoEchoField("schema " + state_schema.name + " has no echo field of " + command_schema.name);
  }
  const Value* v = state.find("echo");
  if (v == nullptr) {
    return false;
  }
  const auto* nested = std::get_if<NestedMessage>(v);
  return nested != nullptr && nested->get() == command;
}

}  // namespace cellbus
