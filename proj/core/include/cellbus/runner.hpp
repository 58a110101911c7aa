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

#include "cellbus/scenario.hpp"

namespace cellbus {

enum class Outcome { Completed, Stuck, SafetyViolation };

std::string_view to_string(Outcome outcome);

struct AssertionResult {
  std::string id;  // "a" .. "f"
  std::string description;
  bool passed = true;
  std::optional<std::uint64_t> first_violation;  // tick

  bool operator==(const AssertionResult&) const = default;
};

struct RunReport {
  Outcome outcome = Outcome::Stuck;
  std::string reason;
  std::uint64_t ticks_used = 0;
  std::string topology;
  std::uint64_t seed = 0;
  std::size_t topic_count = 0;
  std::map<std::string, std::uint64_t> topic_messages;  // "<domain> <topic>" -> deliveries
  std::vector<AssertionResult> assertions;
  /// Controller "start|done <tick> <op> <state>" lines in order.
  std::vector<std::string> boundaries;
  std::string trace_path;

  bool assertions_pass() const;
  bool success() const { return outcome == Outcome::Completed && assertions_pass(); }
  std::string to_json() const;
  bool operator==(const RunReport&) const = default;
};

struct RunOptions {
  std::optional<TopologyMode> topology;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> max_ticks;
  std::optional<std::vector<ScriptEntry>> operator_script;
  std::vector<FaultSpec> faults;  // added to the scenario's own
  TopologyOptions topology_options;
  std::optional<std::filesystem::path> trace_path;
};

struct RunResult {
  RunReport report;
  std::string trace;
};

/// Deterministic simulation of the scenario until every operation is done,
/// an operation gets stuck, a specification is violated or max_ticks runs
/// out. Writes the trace when a path is given.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

/// Evaluates a trace. Throws TraceCorrupt on a checksum mismatch or a
/// malformed line.
RunReport derive_report(std::string_view trace);

/// Reads and evaluates a trace file. Throws TraceCorrupt.
RunReport replay(const std::filesystem::path& trace_path);

/// Boundary lines present in one report and not at the same position in the
/// other; empty when the controller-state traces agree.
std::vector<std::string> compare_boundaries(const RunReport& a, const RunReport& b);

}  // namespace cellbus
