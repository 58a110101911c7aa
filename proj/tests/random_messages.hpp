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

#include <random>
#include <string>

#include "cellbus/schema.hpp"

namespace cellbus::testing {

inline std::string random_text(std::mt19937_64& rng) {
  static constexpr char kAlphabet[] = "abcXYZ019 _-\"\\/{}:,";
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof kAlphabet - 2);
  std::string s;
  for (int i = len(rng); i > 0; --i) {
    s += kAlphabet[pick(rng)];
  }
  return s;
}

inline float random_in_range(std::mt19937_64& rng, const std::optional<Range>& range) {
  double lo = -1000.0;
  double hi = 1000.0;
  if (range && range->lower) {
    lo = range->lower->value;
  }
  if (range && range->upper) {
    hi = range->upper->value;
  } else if (range && range->lower) {
    hi = lo + 100.0;
  }
  std::uniform_real_distribution<double> d(lo, hi);
  for (;;) {
    const float x = static_cast<float>(d(rng));
    if (!range || range->contains(x)) {
      return x;
    }
  }
}

/// Uniformly random message that validates against `id`.
inline Message random_message(const SchemaRegistry& reg, const SchemaId& id, std::mt19937_64& rng) {
  const MessageSchema& schema = reg.get(id);
  std::bernoulli_distribution coin(0.5);
  Message m;
  for (const auto& f : schema.fields) {
    if (f.optional && coin(rng)) {
      continue;
    }
    switch (f.type.kind) {
      case FieldKind::Str: m.set(f.name, Value{random_text(rng)}); break;
      case FieldKind::Bool: m.set(f.name, Value{coin(rng)}); break;
      case FieldKind::F32: m.set(f.name, Value{random_in_range(rng, f.range)}); break;
      case FieldKind::StrList: {
        StrList items;
        for (int i = std::uniform_int_distribution<int>(0, 3)(rng); i > 0; --i) {
          items.push_back(random_text(rng));
        }
        m.set(f.name, Value{std::move(items)});
        break;
      }
      case FieldKind::Nested: m.set(f.name, random_message(reg, f.type.nested, rng)); break;
    }
  }
  if (schema.freshness) {
    const auto& rule = *schema.freshness;
    if (coin(rng)) {
      m.set(rule.age_field, Value{static_cast<float>(std::uniform_real_distribution<double>(0, 1)(rng))});
    }
    m.set(rule.flag_field, Value{m.f32(rule.age_field) <= rule.window});
  }
  return m;
}

/// A value of a different kind than `kind`.
inline Value mismatched_value(FieldKind kind) {
  switch (kind) {
    case FieldKind::Str: return Value{1.5f};
    case FieldKind::Bool: return Value{std::string("true")};
    case FieldKind::F32: return Value{std::string("0.5")};
    case FieldKind::StrList: return Value{false};
    case FieldKind::Nested: return Value{StrList{"x"}};
  }
  return Value{false};
}

}  // namespace cellbus::testing
