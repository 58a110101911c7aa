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

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace cellbus {

using JointVector = std::array<double, 6>;

/// L-infinity joint distance.
double joint_distance(const JointVector& a, const JointVector& b);

/// Named joint poses of one robot.
class PoseRegistry {
 public:
  /// Overwrites an existing entry.
  void set(const std::string& name, const JointVector& q) { poses_[name] = q; }
  std::optional<JointVector> find(const std::string& name) const;
  /// Closest pose within `toll`; equal distances resolve to the
  /// lexicographically smallest name.
  std::optional<std::string> nearest_within(const JointVector& q, double toll) const;
  const std::map<std::string, JointVector>& entries() const { return poses_; }

 private:
  std::map<std::string, JointVector> poses_;
};

struct RobotBody {
  JointVector q{};
  PoseRegistry poses;
};

enum class EffectorLocation { Dock, Flange, Floating };

/// Simulated mobile platform behind a REST-style text interface. Its state
/// is private; callers see only request/response text.
class MirService {
 public:
  struct Point {
    double x = 0.0;
    double y = 0.0;
  };

  MirService() = default;
  MirService(std::map<std::string, Point> stations, std::string start, double speed = 1.0);

  /// `POST /move\ntarget=<station>` or `GET /status`. Returns nullopt while
  /// the service is unreachable.
  std::optional<std::string> handle(std::string_view request);
  void step(double dt);
  void set_available(bool available) { available_ = available; }
  bool available() const { return available_; }

 private:
  std::map<std::string, Point> stations_;
  Point position_;
  std::deque<std::string> queue_;
  double speed_ = 1.0;
  double battery_ = 100.0;
  bool available_ = true;
};

/// Parses `key=value` lines of a service response body.
std::map<std::string, std::string> parse_key_values(std::string_view text);

enum class OperatorEvent { Badge, ZoneEnter, ZoneExit, LadderPlaced, BoltsPlaced, FiltersPlaced, PipesDone };

std::string_view to_string(OperatorEvent e);
std::optional<OperatorEvent> parse_operator_event(std::string_view text);

struct ScriptEntry {
  enum class Kind { At, OnPrompt };
  Kind kind = Kind::At;
  double time = 0.0;        // At
  std::string instruction;  // OnPrompt
  double min_delay = 0.0;   // OnPrompt, seconds
  double max_delay = 0.0;
  OperatorEvent event = OperatorEvent::Badge;
};

/// Lines `at <t> <EVENT>` or `on_prompt <INSTRUCTION> <EVENT> <min> <max>`.
/// Throws ParseError.
std::vector<ScriptEntry> parse_operator_script(std::string_view text, const std::string& filename);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit_uniform(std::mt19937_64& rng);

class CellWorld;

/// The human in the cell: fires scripted events at fixed times and reacts to
/// screen instructions after a seeded random delay.
class OperatorModel {
 public:
  OperatorModel() = default;
  OperatorModel(std::vector<ScriptEntry> script, std::uint64_t seed);

  /// Applies every event due at `tick` to the world.
  void step(CellWorld& world, std::uint64_t tick, double tick_len);

  struct Fired {
    std::uint64_t tick;
    OperatorEvent event;
  };
  const std::vector<Fired>& fired() const { return fired_; }

 private:
  struct Pending {
    std::uint64_t tick;
    std::size_t order;
    OperatorEvent event;
  };

  std::vector<ScriptEntry> script_;
  std::vector<bool> prompted_;
  std::vector<Pending> pending_;
  std::vector<Fired> fired_;
  std::mt19937_64 rng_;
  std::size_t order_ = 0;
};

/// Physical state of the assembly cell. Nodes read and act on it; their own
/// memory holds only command bookkeeping.
class CellWorld {
 public:
  static constexpr int kBoltPairs = 12;
  static constexpr int kOilFilters = 3;

  std::map<std::string, RobotBody> robots;
  std::map<std::string, EffectorLocation> effectors;
  std::vector<bool> bolts = std::vector<bool>(kBoltPairs, false);
  std::vector<bool> filters = std::vector<bool>(kOilFilters, false);
  int work_progress = 0;  // ticks spent on the item being tightened
  std::string activity;   // work done this tick, e.g. "tighten:bolts"; cleared every tick

  bool operator_verified = false;
  bool zone_occupied = false;
  std::string screen;  // instruction currently shown to the operator
  bool ladder_placed = false;
  bool bolts_placed = false;
  bool filters_placed = false;
  bool pipes_done = false;

  MirService mir;
  OperatorModel operator_model;

  bool safeguard_stop() const { return zone_occupied && !operator_verified; }
  void apply(OperatorEvent e);
  int count(const std::vector<bool>& items) const;
  std::string bitmap(const std::vector<bool>& items) const;
  std::optional<JointVector> joints(const std::string& robot) const;
  std::vector<std::string> attached_effectors() const;
  /// End-effector on the robot flange, "" if none.
  std::string on_flange() const;

  /// One-line snapshot used in traces.
  std::string record() const;
};

}  // namespace cellbus
