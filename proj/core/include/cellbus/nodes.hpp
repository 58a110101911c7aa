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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cellbus/bus.hpp"
#include "cellbus/hub.hpp"
#include "cellbus/world.hpp"

namespace cellbus {

inline constexpr double kMaxJointSpeed = 1.0;  // rad/s at speed_scal 1
inline constexpr int kTightenTicks = 50;       // per bolt pair or filter
inline constexpr double kArrivalSlack = 1e-12;

struct NodeContext {
  CellWorld& world;
  std::uint64_t tick = 0;
  double tick_len = 0.1;

  double now() const { return static_cast<double>(tick) * tick_len; }
};

/// The only memory a cell node keeps: the last accepted command and when a
/// command last arrived.
class CommandMemory {
 public:
  explicit CommandMemory(std::uint64_t start_tick) : last_tick_(start_tick) {}

  /// Records receipt of `command`. Returns true when it differs from the
  /// echoed command, i.e. it is accepted as a new command.
  bool receive(const Message& command, std::uint64_t tick);

  const std::optional<Message>& echo() const { return echo_; }
  bool got_reset() const { return got_reset_; }
  /// Seconds since the last command arrived, or since start if none did.
  float t_plus(std::uint64_t tick, double tick_len) const;

  /// Sets fresh_msg, t_plus, echo and (optionally) got_reset on `state`.
  void stamp(Message& state, const NodeContext& ctx, bool with_reset_flag) const;

 private:
  std::optional<Message> echo_;
  std::uint64_t last_tick_;
  bool got_reset_ = true;
};

/// A simulated cell resource. Each tick it consumes the commands addressed
/// to it and returns one state message.
class CellNode {
 public:
  CellNode(NodeDescriptor desc, std::uint64_t start_tick) : desc_(std::move(desc)), memory_(start_tick) {}
  virtual ~CellNode() = default;

  const NodeDescriptor& descriptor() const { return desc_; }
  const CommandMemory& memory() const { return memory_; }

  virtual Message tick(const std::vector<Message>& commands, NodeContext& ctx) = 0;

 protected:
  std::string param(const std::string& key, const std::string& fallback) const;

  NodeDescriptor desc_;
  CommandMemory memory_;
};

/// Joint-space mover (MOVEJ). Steps every joint toward the target at
/// speed_scal * kMaxJointSpeed; frozen while the safeguard stop is active.
class MoverNode : public CellNode {
 public:
  MoverNode(NodeDescriptor desc, std::uint64_t start_tick);
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;

 private:
  std::string robot_;
  std::string robot_name_;
  StrList errors_;
};

/// Saves the robot's current joints under a pose name (UPDATE).
class PoseSaverNode : public CellNode {
 public:
  PoseSaverNode(NodeDescriptor desc, std::uint64_t start_tick);
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;

 private:
  std::string robot_;
  std::string robot_name_;
  std::string done_action_;
};

/// Tool changer and fastener: ATTACH, DETACH, FLOAT, TIGHTEN.
class SmartToolNode : public CellNode {
 public:
  SmartToolNode(NodeDescriptor desc, std::uint64_t start_tick);
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;

 private:
  std::string bolt_tool_;
  std::string filter_tool_;
};

/// Bus-to-REST translator for the mobile platform (MOVE_TO).
class TranslatorNode : public CellNode {
 public:
  TranslatorNode(NodeDescriptor desc, std::uint64_t start_tick);
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;

 private:
  bool pending_post_ = false;
  StrList command_errors_;
};

/// Publishes RFID and camera derived safety status.
class RfidCamNode : public CellNode {
 public:
  using CellNode::CellNode;
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;
};

/// Smart watch and instruction screen (SHOW, CLEAR).
class OperatorNode : public CellNode {
 public:
  using CellNode::CellNode;
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;
};

/// End-effector dock; reports which of its effectors are docked.
class DockNode : public CellNode {
 public:
  using CellNode::CellNode;
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;
};

/// The platform's own status publisher on its isolated network.
class MirSuiteNode : public CellNode {
 public:
  using CellNode::CellNode;
  Message tick(const std::vector<Message>& commands, NodeContext& ctx) override;
};

/// Nullptr for roles without a simulated resource (controller, gateways).
std::unique_ptr<CellNode> make_node(const NodeDescriptor& desc, std::uint64_t start_tick);

/// Connects a CellNode to its bus endpoints, unwrapping hub-keyed or typed
/// commands. Restarting drops all node memory and re-creates the endpoints.
class NodeRuntime {
 public:
  NodeRuntime(Bus& bus, NodeBinding binding, std::uint64_t start_tick);

  void tick(NodeContext& ctx);
  /// Takes the node down: endpoints closed, memory dropped.
  void stop();
  /// Brings the node back with empty memory.
  void restart(std::uint64_t tick);
  bool running() const { return node_ != nullptr; }

  const NodeBinding& binding() const { return binding_; }
  const CellNode* node() const { return node_.get(); }

 private:
  void connect(std::uint64_t tick);
  std::vector<Message> unwrap(std::vector<Message> raw) const;

  Bus* bus_;
  NodeBinding binding_;
  std::unique_ptr<CellNode> node_;
  Subscriber commands_;
  Publisher state_;
  std::uint64_t start_tick_ = 0;
  std::uint64_t period_ticks_ = 1;
};

}  // namespace cellbus
