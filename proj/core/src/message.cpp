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

#include "cellbus/message.hpp"

#include "cellbus/errors.hpp"

namespace cellbus {

NestedMessage::NestedMessage() : message_(std::make_shared<const Message>()) {}

NestedMessage::NestedMessage(Message message)
    : message_(std::make_shared<const Message>(std::move(message))) {}

Message& Message::set(std::string name, Value value) {
  fields_.insert_or_assign(std::move(name), std::move(value));
  return *this;
}

void Message::erase(std::string_view name) {
  if (auto it = fields_.find(name); it != fields_.end()) {
    fields_.erase(it);
  }
}

bool Message::has(std::string_view name) const { return fields_.find(name) != fields_.end(); }

const Value* Message::find(std::string_view name) const {
  auto it = fields_.find(name);
  return it == fields_.end() ? nullptr : &it->second;
}

namespace {

template <typename T>
const T& typed(const Message& m, std::string_view name, const char* kind) {
  const Value* v = m.find(name);
  if (v == nullptr) {
    throw FieldAccessError("missing field '" + std::string(name) + "'");
  }
  const T* p = std::get_if<T>(v);
  if (p == nullptr) {
    throw FieldAccessError("field '" + std::string(name) + "' is not " + kind);
  }
  return *p;
}

}  // namespace

const std::string& Message::str(std::string_view name) const {
  return typed<std::string>(*this, name, "a string");
}
bool Message::boolean(std::string_view name) const { return typed<bool>(*this, name, "a bool"); }
float Message::f32(std::string_view name) const { return typed<float>(*this, name, "an f32"); }
const StrList& Message::list(std::string_view name) const {
  return typed<StrList>(*this, name, "a string list");
}
const Message& Message::nested(std::string_view name) const {
  return typed<NestedMessage>(*this, name, "a nested record").get();
}

const Value* Message::find_path(std::string_view path) const {
  const Message* current = this;
  while (true) {
    const auto dot = path.find('.');
    const Value* v = current->find(path.substr(0, dot));
    if (dot == std::string_view::npos || v == nullptr) {
      return v;
    }
    const auto* nested = std::get_if<NestedMessage>(v);
    if (nested == nullptr) {
      return nullptr;
    }
    current = &nested->get();
    path.remove_prefix(dot + 1);
  }
}

}  // namespace cellbus
