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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellbus/hub.hpp"
#include "cellbus/model.hpp"
#include "cellbus/schema.hpp"
#include "cellbus/world.hpp"

namespace cellbus {

inline constexpr std::uint64_t kDefaultMaxTicks = 50000;

/// One injected fault, written `<kind>:<target>[:<p>]@<start>+<duration>`.
/// Kinds: bridge (target is a bridge id glob), node (stop, then restart),
/// drop (target is a topic path, p the loss probability) and service (the
/// platform REST service).
struct FaultSpec {
  enum class Kind { Bridge, Node, Drop, Service };

  Kind kind = Kind::Bridge;
  std::string target;
  double probability = 1.0;
  std::uint64_t start = 0;
  std::uint64_t duration = 0;

  bool active(std::uint64_t tick) const { return tick >= start && tick < start + duration; }
  std::string str() const;
};

/// Throws ConfigError.
FaultSpec parse_fault(std::string_view text);

struct MirConfig {
  std::map<std::string, MirService::Point> stations;
  std::string start;
  double speed = 1.0;
};

/// A fully validated scenario directory.
struct Scenario {
  std::string name;
  std::filesystem::path dir;
  std::vector<MessageSchema> extra_schemas;
  std::vector<HubConfig> hubs;
  std::map<std::string, RobotBody> robots;  // start joints and taught poses
  std::vector<std::string> effectors;       // all start docked
  MirConfig mir;
  TopologyMode topology = TopologyMode::HubGateway;
  Model model;
  std::vector<ScriptEntry> operator_script;
  std::vector<FaultSpec> faults;
  std::uint64_t seed = 1;
  std::uint64_t max_ticks = kDefaultMaxTicks;
  double tick_len = 0.1;

  /// Standard schemas plus the scenario's own.
  SchemaRegistry registry() const;
};

/// Lines `hub <id> host=<h> domain=<modern|legacy|name> [bridged=true]
/// [gateway=direct|distributor-collector]` followed by its
/// `node <name> <role> [period=<s>] [key=value...]` lines. Throws ParseError.
std::vector<HubConfig> parse_hubs(std::string_view text, const std::string& filename);

/// Lines `robot <name>`, then `start <6 joints>` and `pose <NAME> <6 joints>`
/// for that robot. Throws ParseError, and UnresolvedReference for robots not
/// in `declared`.
std::map<std::string, RobotBody> parse_poses(std::string_view text, const std::string& filename,
                                             const std::vector<std::string>& declared);

/// Reads `<dir>/scenario.txt` and the files it names. Throws ParseError,
/// UnresolvedReference, ConfigError.
Scenario load_scenario(const std::filesystem::path& dir);

}  // namespace cellbus
