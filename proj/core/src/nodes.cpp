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

#include "cellbus/nodes.hpp"

#include <algorithm>
#include <cmath>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

namespace {

constexpr double kDefaultToll = 0.01;

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) {
      end = s.size();
    }
    if (end > start) {
      out.push_back(s.substr(start, end - start));
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

bool CommandMemory::receive(const Message& command, std::uint64_t tick) {
  last_tick_ = tick;
  if (echo_ && *echo_ == command) {
    return false;
  }
  echo_ = command;
  got_reset_ = false;
  return true;
}

float CommandMemory::t_plus(std::uint64_t tick, double tick_len) const {
  return static_cast<float>(static_cast<double>(tick - last_tick_) * tick_len);
}

void CommandMemory::stamp(Message& state, const NodeContext& ctx, bool with_reset_flag) const {
  const float age = t_plus(ctx.tick, ctx.tick_len);
  state.set("t_plus", Value{age});
  state.set("fresh_msg", Value{age <= kFreshWindow});
  if (with_reset_flag) {
    state.set("got_reset", Value{got_reset_});
  }
  if (echo_) {
    state.set("echo", *echo_);
  }
}

std::string CellNode::param(const std::string& key, const std::string& fallback) const {
  auto it = desc_.params.find(key);
  return it == desc_.params.end() ? fallback : it->second;
}

MoverNode::MoverNode(NodeDescriptor desc, std::uint64_t start_tick) : CellNode(std::move(desc), start_tick) {
  robot_ = param("robot", desc_.name);
  robot_name_ = param("robot_name", upper(robot_));
}

Message MoverNode::tick(const std::vector<Message>& commands, NodeContext& ctx) {
  auto body = ctx.world.robots.find(robot_);
  for (const auto& cmd : commands) {
    if (!memory_.receive(cmd, ctx.tick)) {
      continue;
    }
    errors_.clear();
    const auto& action = cmd.str("action");
    if (action != "MOVEJ") {
      errors_.push_back("unsupported_action:" + action);
    } else if (body == ctx.world.robots.end()) {
      errors_.push_back("no_robot:" + robot_);
    } else if (!body->second.poses.find(cmd.str("pose_name"))) {
      errors_.push_back("unknown_pose:" + cmd.str("pose_name"));
    }
  }
  bool moving = false;
  std::string actual = "UNKNOWN";
  const auto& echo = memory_.echo();
  if (body != ctx.world.robots.end()) {
    auto& q = body->second.q;
    const double toll = echo ? echo->f32("goal_toll") : kDefaultToll;
    if (echo && errors_.empty()) {
      const JointVector target = *body->second.poses.find(echo->str("pose_name"));
      if (joint_distance(q, target) > toll + kArrivalSlack) {
        if (!ctx.world.safeguard_stop()) {
          const double step = static_cast<double>(echo->f32("speed_scal")) * kMaxJointSpeed * ctx.tick_len;
          for (std::size_t i = 0; i < q.size(); ++i) {
            const double diff = target[i] - q[i];
            q[i] += std::clamp(diff, -step, step);
          }
        }
        moving = joint_distance(q, target) > toll + kArrivalSlack;
      }
    }
    if (auto name = body->second.poses.nearest_within(q, toll + kArrivalSlack)) {
      actual = *name;
    }
  }
  Message state;
  state.set("robot_name", Value{robot_name_})
      .set("error_list", Value{errors_})
      .set("moving", Value{moving})
      .set("actual_pose", Value{actual});
  memory_.stamp(state, ctx, true);
  return state;
}

PoseSaverNode::PoseSaverNode(NodeDescriptor desc, std::uint64_t start_tick)
    : CellNode(std::move(desc), start_tick) {
  robot_ = param("robot", "");
  robot_name_ = param("robot_name", upper(robot_));
}

Message PoseSaverNode::tick(const std::vector<Message>& commands, NodeContext& ctx) {
  for (const auto& cmd : commands) {
    if (!memory_.receive(cmd, ctx.tick)) {
      continue;
    }
    if (cmd.str("action") != "UPDATE") {
      done_action_ = "error:unsupported_action";
      continue;
    }
    auto body = ctx.world.robots.find(robot_);
    if (body == ctx.world.robots.end()) {
      done_action_ = "error:no_robot_state";
      continue;
    }
    body->second.poses.set(cmd.str("pose_name"), body->second.q);
    done_action_ = "updated";
  }
  Message state;
  state.set("robot_name", Value{robot_name_}).set("done_action", Value{done_action_});
  memory_.stamp(state, ctx, false);
  return state;
}

SmartToolNode::SmartToolNode(NodeDescriptor desc, std::uint64_t start_tick)
    : CellNode(std::move(desc), start_tick) {
  bolt_tool_ = param("bolt_tool", "smart_tool");
  filter_tool_ = param("filter_tool", "oil_tool");
}

Message SmartToolNode::tick(const std::vector<Message>& commands, NodeContext& ctx) {
  for (const auto& cmd : commands) {
    memory_.receive(cmd, ctx.tick);
  }
  auto& w = ctx.world;
  StrList errors;
  std::string done;
  bool busy = false;
  if (const auto& echo = memory_.echo()) {
    const auto& action = echo->str("action");
    const auto flange = w.on_flange();
    if (action == "ATTACH") {
      const auto& ee = echo->str("end_effector");
      if (w.effectors.count(ee) == 0) {
        errors.push_back("unknown_end_effector:" + ee);
      } else if (flange == ee) {
        done = "attached";
      } else if (!flange.empty()) {
        errors.push_back("occupied");
      } else {
        w.effectors[ee] = EffectorLocation::Flange;
        done = "attached";
      }
    } else if (action == "DETACH") {
      if (!flange.empty()) {
        w.effectors[flange] = EffectorLocation::Dock;
      }
      done = "detached";
    } else if (action == "FLOAT") {
      if (flange == bolt_tool_) {
        w.effectors[bolt_tool_] = EffectorLocation::Floating;
        done = "floated";
      } else if (flange.empty() && w.effectors.count(bolt_tool_) &&
                 w.effectors[bolt_tool_] == EffectorLocation::Floating) {
        done = "floated";
      } else {
        errors.push_back(flange.empty() ? "no_tool" : "wrong_tool");
      }
    } else if (action == "TIGHTEN") {
      const auto& target = echo->str("target");
      std::vector<bool>* items = target == "bolts" ? &w.bolts : target == "filters" ? &w.filters : nullptr;
      const std::string& needed = target == "bolts" ? bolt_tool_ : filter_tool_;
      if (items == nullptr) {
        errors.push_back("unknown_target:" + target);
      } else if (flange.empty()) {
        errors.push_back("no_tool");
      } else if (flange != needed) {
        errors.push_back("wrong_tool");
      } else {
        const auto n = std::min(items->size(), static_cast<std::size_t>(std::max(0.0f, echo->f32("count"))));
        auto next = std::find(items->begin(), items->begin() + static_cast<std::ptrdiff_t>(n), false);
        if (next != items->begin() + static_cast<std::ptrdiff_t>(n)) {
          w.activity = "tighten:" + target;
          if (++w.work_progress >= kTightenTicks) {
            *next = true;
            w.work_progress = 0;
          }
        }
        busy = std::find(items->begin(), items->begin() + static_cast<std::ptrdiff_t>(n), false) !=
               items->begin() + static_cast<std::ptrdiff_t>(n);
        if (!busy) {
          done = "tightened";
        }
      }
    } else {
      errors.push_back("unsupported_action:" + action);
    }
  }
  const auto flange = w.on_flange();
  const bool floating = w.effectors.count(bolt_tool_) && w.effectors.at(bolt_tool_) == EffectorLocation::Floating;
  Message state;
  state.set("tool_name", Value{param("tool_name", desc_.name)})
      .set("error_list", Value{errors})
      .set("attached", Value{flange.empty() ? std::string("none") : flange})
      .set("floating", Value{floating})
      .set("bolt_bitmap", Value{w.bitmap(w.bolts)})
      .set("filter_bitmap", Value{w.bitmap(w.filters)})
      .set("bolts_tightened", Value{static_cast<float>(w.count(w.bolts))})
      .set("filters_tightened", Value{static_cast<float>(w.count(w.filters))})
      .set("busy", Value{busy})
      .set("done_action", Value{done});
  memory_.stamp(state, ctx, true);
  return state;
}

TranslatorNode::TranslatorNode(NodeDescriptor desc, std::uint64_t start_tick)
    : CellNode(std::move(desc), start_tick) {}

Message TranslatorNode::tick(const std::vector<Message>& commands, NodeContext& ctx) {
  auto& mir = ctx.world.mir;
  for (const auto& cmd : commands) {
    if (!memory_.receive(cmd, ctx.tick)) {
      continue;
    }
    command_errors_.clear();
    pending_post_ = false;
    if (cmd.str("action") != "MOVE_TO") {
      command_errors_.push_back("unsupported_action:" + cmd.str("action"));
    } else {
      pending_post_ = true;
    }
  }
  if (pending_post_) {
    const auto& target = memory_.echo()->str("pose_name");
    if (auto resp = mir.handle("POST /move\ntarget=" + target)) {
      pending_post_ = false;
      if (resp->rfind("404", 0) == 0) {
        command_errors_.push_back("unknown_station:" + target);
      }
    }
  }
  StrList errors = command_errors_;
  bool moving = false;
  std::string actual = "UNKNOWN";
  if (auto status = mir.handle("GET /status")) {
    const auto kv = parse_key_values(*status);
    moving = kv.count("moving") && kv.at("moving") == "true";
    if (kv.count("position") && kv.at("position") != "moving") {
      actual = kv.at("position");
    }
  } else {
    errors.push_back("mir_unreachable");
  }
  Message state;
  state.set("robot_name", Value{param("robot_name", "MIR")})
      .set("error_list", Value{errors})
      .set("moving", Value{moving})
      .set("actual_pose", Value{actual});
  memory_.stamp(state, ctx, true);
  return state;
}

Message RfidCamNode::tick(const std::vector<Message>&, NodeContext& ctx) {
  Message state;
  state.set("operator_verified", Value{ctx.world.operator_verified})
      .set("zone_occupied", Value{ctx.world.zone_occupied})
      .set("safeguard_stop", Value{ctx.world.safeguard_stop()});
  return state;
}

Message OperatorNode::tick(const std::vector<Message>& commands, NodeContext& ctx) {
  for (const auto& cmd : commands) {
    memory_.receive(cmd, ctx.tick);
  }
  auto& w = ctx.world;
  StrList errors;
  if (const auto& echo = memory_.echo()) {
    const auto& action = echo->str("action");
    if (action == "SHOW") {
      w.screen = echo->str("instruction");
    } else if (action == "CLEAR") {
      w.screen.clear();
    } else {
      errors.push_back("unsupported_action:" + action);
    }
  }
  Message state;
  state.set("operator_name", Value{param("operator_name", desc_.name)})
      .set("error_list", Value{errors})
      .set("instruction", Value{w.screen.empty() ? std::string("none") : w.screen})
      .set("ladder_placed", Value{w.ladder_placed})
      .set("bolts_placed", Value{w.bolts_placed})
      .set("filters_placed", Value{w.filters_placed})
      .set("pipes_done", Value{w.pipes_done});
  memory_.stamp(state, ctx, true);
  return state;
}

Message DockNode::tick(const std::vector<Message>&, NodeContext& ctx) {
  StrList docked;
  for (const auto& ee : split_commas(param("holds", ""))) {
    auto it = ctx.world.effectors.find(ee);
    if (it != ctx.world.effectors.end() && it->second == EffectorLocation::Dock) {
      docked.push_back(ee);
    }
  }
  const auto flange = ctx.world.on_flange();
  Message state;
  state.set("dock_name", Value{desc_.name})
      .set("docked", Value{docked})
      .set("attached", Value{flange.empty() ? std::string("none") : flange});
  return state;
}

Message MirSuiteNode::tick(const std::vector<Message>&, NodeContext& ctx) {
  Message state;
  auto status = ctx.world.mir.handle("GET /status");
  if (!status) {
    state.set("position", "offline").set("moving", Value{false}).set("battery", Value{0.0f})
        .set("mission_queue", Value{StrList{}});
    return state;
  }
  const auto kv = parse_key_values(*status);
  state.set("position", Value{kv.at("position")})
      .set("moving", Value{kv.at("moving") == "true"})
      .set("battery", Value{static_cast<float>(detail::parse_double(kv.at("battery")).value_or(0.0))})
      .set("mission_queue", Value{split_commas(kv.at("queue"))});
  return state;
}

std::unique_ptr<CellNode> make_node(const NodeDescriptor& desc, std::uint64_t start_tick) {
  switch (desc.role) {
    case Role::Mover: return std::make_unique<MoverNode>(desc, start_tick);
    case Role::PoseSaver: return std::make_unique<PoseSaverNode>(desc, start_tick);
    case Role::SmartTool: return std::make_unique<SmartToolNode>(desc, start_tick);
    case Role::Translator: return std::make_unique<TranslatorNode>(desc, start_tick);
    case Role::RfidCam: return std::make_unique<RfidCamNode>(desc, start_tick);
    case Role::Operator: return std::make_unique<OperatorNode>(desc, start_tick);
    case Role::Dock: return std::make_unique<DockNode>(desc, start_tick);
    case Role::MirSuite: return std::make_unique<MirSuiteNode>(desc, start_tick);
    case Role::Controller:
    case Role::Distributor:
    case Role::Collector: return nullptr;
  }
  return nullptr;
}

NodeRuntime::NodeRuntime(Bus& bus, NodeBinding binding, std::uint64_t start_tick)
    : bus_(&bus), binding_(std::move(binding)) {
  period_ticks_ = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(binding_.node.period / bus.options().tick_len)));
  restart(start_tick);
}

void NodeRuntime::connect(std::uint64_t tick) {
  start_tick_ = tick;
  const auto domain = bus_->domain(binding_.domain);
  const NodeId owner{binding_.node.name};
  if (binding_.command) {
    const auto& t = binding_.command->topic;
    commands_ = bus_->subscribe(domain, t.topic, t.schema, t.qos, owner);
  }
  if (binding_.state) {
    const auto& t = *binding_.state;
    state_ = bus_->advertise(domain, t.topic, t.schema, t.qos, owner);
  }
}

void NodeRuntime::stop() {
  node_.reset();
  commands_.close();
  state_.close();
}

void NodeRuntime::restart(std::uint64_t tick) {
  stop();
  node_ = make_node(binding_.node, tick);
  if (node_) {
    connect(tick);
  }
}

std::vector<Message> NodeRuntime::unwrap(std::vector<Message> raw) const {
  if (!binding_.command || binding_.command->wrap == CommandWrap::Plain) {
    return raw;
  }
  std::vector<Message> out;
  const auto& name = binding_.node.name;
  for (const auto& m : raw) {
    if (binding_.command->wrap == CommandWrap::HubKey) {
      if (const Value* v = m.find(name)) {
        out.push_back(std::get<NestedMessage>(*v).get());
      }
    } else if (m.str("hub_id") == binding_.node.hub && m.str("robot_name") == name) {
      out.push_back(m.nested("command"));
    }
  }
  return out;
}

void NodeRuntime::tick(NodeContext& ctx) {
  if (!node_) {
    return;
  }
  std::vector<Message> inbox;
  if (commands_.valid()) {
    inbox = unwrap(commands_.poll());
  }
  Message state = node_->tick(inbox, ctx);
  if (state_.valid() && (ctx.tick - start_tick_) % period_ticks_ == 0) {
    state_.publish(state);
  }
}

}  // namespace cellbus
