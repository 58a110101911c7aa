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

#include <string>
#include <string_view>

#include "cellbus/message.hpp"
#include "cellbus/schema.hpp"

namespace cellbus {

/// Canonical text encoding: JSON object, keys sorted, no whitespace, F32
/// printed with 9 significant digits (enough to round-trip any float).
/// Equal messages always encode to identical bytes.
std::string encode(const Message& message);

/// Parses `bytes` as a message of `schema`. Throws DecodeError on malformed
/// input, unknown fields or type mismatches. Range checks are left to
/// SchemaRegistry::validate.
Message decode(const SchemaRegistry& registry, const SchemaId& schema, std::string_view bytes);

/// "%.9g" rendering used by the encoder and by trace records.
std::string format_f32(float value);

}  // namespace cellbus
