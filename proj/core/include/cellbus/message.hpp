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
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cellbus {

class Message;

/// Immutable, shareable nested record. Copies are cheap and compare by value.
class NestedMessage {
 public:
  NestedMessage();
  explicit NestedMessage(Message message);

  const Message& get() const { return *message_; }

  friend bool operator==(const NestedMessage& a, const NestedMessage& b);

 private:
  std::shared_ptr<const Message> message_;
};

using StrList = std::vector<std::string>;
using Value = std::variant<std::string, bool, float, StrList, NestedMessage>;

/// A typed record. Fields are kept key-sorted, which is also the canonical
/// encoding order.
class Message {
 public:
  using FieldMap = std::map<std::string, Value, std::less<>>;

  Message() = default;

  Message& set(std::string name, Value value);
  Message& set(std::string name, const char* value) {
    return set(std::move(name), Value{std::string(value)});
  }
  Message& set(std::string name, Message nested) {
    return set(std::move(name), Value{NestedMessage(std::move(nested))});
  }
  void erase(std::string_view name);

  bool has(std::string_view name) const;
  const Value* find(std::string_view name) const;

  // Typed accessors throw FieldAccessError on a missing field or kind mismatch.
  const std::string& str(std::string_view name) const;
  bool boolean(std::string_view name) const;
  float f32(std::string_view name) const;
  const StrList& list(std::string_view name) const;
  const Message& nested(std::string_view name) const;

  /// Resolves a dotted path ("tars.echo.pose_name") through nested records.
  const Value* find_path(std::string_view path) const;

  const FieldMap& fields() const { return fields_; }
  bool empty() const { return fields_.empty(); }

  friend bool operator==(const Message& a, const Message& b) {
    return a.fields_ == b.fields_;
  }

 private:
  FieldMap fields_;
};

inline bool operator==(const NestedMessage& a, const NestedMessage& b) {
  return a.message_ == b.message_ || *a.message_ == *b.message_;
}

}  // namespace cellbus
