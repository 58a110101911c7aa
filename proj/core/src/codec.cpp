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

#include "cellbus/codec.hpp"

#include <cstdio>

#include <json.hpp>

#include "cellbus/errors.hpp"

namespace cellbus {

std::string format_f32(float value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(value));
  return buf;
}

namespace {

void append_string(std::string& out, const std::string& s) {
  out += nlohmann::json(s).dump();
}

void append_message(std::string& out, const Message& m);

void append_value(std::string& out, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          append_string(out, x);
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, float>) {
          out += format_f32(x);
        } else if constexpr (std::is_same_v<T, StrList>) {
          out += '[';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i != 0) {
              out += ',';
            }
            append_string(out, x[i]);
          }
          out += ']';
        } else {
          append_message(out, x.get());
        }
      },
      v);
}

void append_message(std::string& out, const Message& m) {
  out += '{';
  bool first = true;
  for (const auto& [name, value] : m.fields()) {
    if (!first) {
      out += ',';
    }
    first = false;
    append_string(out, name);
    out += ':';
    append_value(out, value);
  }
  out += '}';
}

Message from_json(const SchemaRegistry& registry, const MessageSchema& schema, const nlohmann::json& j,
                  const std::string& prefix) {
  if (!j.is_object()) {
    throw DecodeError("expected object for " + schema.id.name + " at '" + prefix + "'");
  }
  Message m;
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix + key;
    const FieldSpec* f = schema.field(key);
    if (f == nullptr) {
      throw DecodeError("unknown field '" + path + "' for " + schema.id.name);
    }
    switch (f->type.kind) {
      case FieldKind::Str:
        if (!value.is_string()) {
          throw DecodeError("field '" + path + "' is not a string");
        }
        m.set(key, Value{value.get<std::string>()});
        break;
      case FieldKind::Bool:
        if (!value.is_boolean()) {
          throw DecodeError("field '" + path + "' is not a bool");
        }
        m.set(key, Value{value.get<bool>()});
        break;
      case FieldKind::F32:
        if (!value.is_number()) {
          throw DecodeError("field '" + path + "' is not a number");
        }
        m.set(key, Value{static_cast<float>(value.get<double>())});
        break;
      case FieldKind::StrList: {
        if (!value.is_array()) {
          throw DecodeError("field '" + path + "' is not a list");
        }
        StrList items;
        for (const auto& item : value) {
          if (!item.is_string()) {
            throw DecodeError("field '" + path + "' has a non-string item");
          }
          items.push_back(item.get<std::string>());
        }
        m.set(key, Value{std::move(items)});
        break;
      }
      case FieldKind::Nested:
        m.set(key, from_json(registry, registry.get(f->type.nested), value, path + "."));
        break;
    }
  }
  return m;
}

}  // namespace

std::string encode(const Message& message) {
  std::string out;
  append_message(out, message);
  return out;
}

Message decode(const SchemaRegistry& registry, const SchemaId& schema, std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed message: ") + e.what());
  }
  return from_json(registry, registry.get(schema), j, "");
}

}  // namespace cellbus
