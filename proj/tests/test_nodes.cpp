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

#include <gtest/gtest.h>

#include <cmath>

#include "cellbus/errors.hpp"
#include "cellbus/nodes.hpp"
#include "fixtures.hpp"

namespace cellbus {
namespace {

constexpr double kTick = 0.1;

NodeDescriptor desc(std::string name, Role role, std::map<std::string, std::string> params = {}) {
  return NodeDescriptor{std::move(name), role, kTick, "hub", std::move(params)};
}

Message move_to(const std::string& pose, float speed = 0.1f, float toll = 0.01f) {
  auto m = testing::reference_move_command();
  m.set("pose_name", Value{pose}).set("speed_scal", Value{speed}).set("goal_toll", Value{toll});
  return m;
}

Message tool_cmd(const std::string& action, const std::string& ee = "", const std::string& target = "",
                 float count = 0) {
  Message m;
  m.set("action", Value{action})
      .set("tool_name", "smart_tool")
      .set("end_effector", Value{ee})
      .set("target", Value{target})
      .set("count", Value{count});
  return m;
}

class NodesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    register_standard_schemas(reg);
    RobotBody tars;
    tars.poses.set("ZERO", JointVector{});
    tars.poses.set("FAR", JointVector{1.0, -0.5, 0.25, 0.0, 0.0, 0.0});
    world.robots["tars"] = tars;
    world.effectors = {{"ladder_gripper", EffectorLocation::Dock},
                       {"smart_tool", EffectorLocation::Dock},
                       {"oil_tool", EffectorLocation::Dock}};
  }

  NodeContext at(std::uint64_t tick) { return NodeContext{world, tick, kTick}; }

  void expect_valid(const SchemaId& schema, const Message& m) {
    auto err = reg.validate(schema, m);
    EXPECT_FALSE(err) << err->describe();
  }

  SchemaRegistry reg;
  CellWorld world;
};

// Oracle: per-joint step s = speed * V * dt; arrival once d - k*s <= toll.
TEST_F(NodesTest, MoverArrivalTickCountMatchesClosedForm) {
  const double d = 1.0, toll = 0.01, speed = 0.1;
  const auto expected = static_cast<int>(std::ceil((d - toll) / (speed * kMaxJointSpeed * kTick)));
  ASSERT_EQ(expected, 99);

  MoverNode mover(desc("tars", Role::Mover), 0);
  int moving_ticks = 0;
  for (std::uint64_t t = 1; t < 200; ++t) {
    auto ctx = at(t);
    auto s = mover.tick({move_to("FAR", 0.1f, 0.01f)}, ctx);
    expect_valid(schemas::kStateMover, s);
    if (!s.boolean("moving")) {
      EXPECT_EQ(s.str("actual_pose"), "FAR");
      break;
    }
    ++moving_ticks;
  }
  // The tick that completes the last step already reports arrival.
  EXPECT_EQ(moving_ticks + 1, expected);
}

TEST_F(NodesTest, MoverIdentityMoveNeverMoves) {
  MoverNode mover(desc("tars", Role::Mover), 0);
  auto ctx = at(1);
  auto s = mover.tick({move_to("ZERO")}, ctx);
  EXPECT_FALSE(s.boolean("moving"));
  EXPECT_EQ(s.str("actual_pose"), "ZERO");
}

TEST_F(NodesTest, MoverReproducesReferenceIdleState) {
  world.robots["tars"].poses.set("POSE13", JointVector{});
  world.robots["tars"].poses.set("HOME", JointVector{0.005, 0, 0, 0, 0, 0});
  MoverNode mover(desc("tars", Role::Mover), 0);
  auto ctx = at(1);
  mover.tick({testing::reference_move_command()}, ctx);
  Message s;
  for (std::uint64_t t = 2; t <= 9; ++t) {
    auto c = at(t);
    s = mover.tick({}, c);
  }
  EXPECT_EQ(s, testing::reference_mover_state());
}

TEST_F(NodesTest, MoverUnknownPoseEchoesAndReports) {
  MoverNode mover(desc("tars", Role::Mover), 0);
  auto ctx = at(1);
  auto s = mover.tick({move_to("NOWHERE")}, ctx);
  EXPECT_EQ(s.list("error_list"), StrList{"unknown_pose:NOWHERE"});
  EXPECT_EQ(s.nested("echo").str("pose_name"), "NOWHERE");
  EXPECT_FALSE(s.boolean("moving"));
}

TEST_F(NodesTest, GotResetUntilFirstCommand) {
  MoverNode mover(desc("tars", Role::Mover), 0);
  auto c1 = at(1);
  auto s = mover.tick({}, c1);
  EXPECT_TRUE(s.boolean("got_reset"));
  EXPECT_FALSE(s.has("echo"));
  auto c2 = at(2);
  s = mover.tick({move_to("ZERO")}, c2);
  EXPECT_FALSE(s.boolean("got_reset"));
}

TEST_F(NodesTest, SafeguardFreezesJoints) {
  MoverNode mover(desc("tars", Role::Mover), 0);
  auto c1 = at(1);
  mover.tick({move_to("FAR")}, c1);
  const auto before = world.robots["tars"].q;
  world.zone_occupied = true;
  for (std::uint64_t t = 2; t < 20; ++t) {
    auto c = at(t);
    auto s = mover.tick({move_to("FAR")}, c);
    expect_valid(schemas::kStateMover, s);
    EXPECT_EQ(world.robots["tars"].q, before);
  }
  world.operator_verified = true;
  auto c = at(20);
  mover.tick({move_to("FAR")}, c);
  EXPECT_NE(world.robots["tars"].q, before);
}

TEST_F(NodesTest, RestartedMoverConverges) {
  CellWorld reference = world;
  {
    NodeContext c{reference, 0, kTick};
    MoverNode m(desc("tars", Role::Mover), 0);
    for (std::uint64_t t = 1; t < 150; ++t) {
      c.tick = t;
      m.tick({move_to("FAR", 0.2f)}, c);
    }
  }
  auto mover = std::make_unique<MoverNode>(desc("tars", Role::Mover), 0);
  for (std::uint64_t t = 1; t < 150; ++t) {
    if (t == 30) {
      mover = std::make_unique<MoverNode>(desc("tars", Role::Mover), t);
    }
    auto c = at(t);
    mover->tick({move_to("FAR", 0.2f)}, c);
  }
  EXPECT_EQ(world.robots["tars"].q, reference.robots["tars"].q);
}

TEST_F(NodesTest, PoseSaverUpdatesAndAges) {
  world.robots["tars"].q = JointVector{0.3, 0, 0, 0, 0, 0};
  PoseSaverNode saver(desc("pose_saver", Role::PoseSaver, {{"robot", "tars"}}), 0);
  auto c1 = at(1);
  auto s = saver.tick({testing::reference_update_command()}, c1);
  EXPECT_EQ(s.str("done_action"), "updated");
  EXPECT_EQ(world.robots["tars"].poses.find("HOME"), (JointVector{0.3, 0, 0, 0, 0, 0}));
  // Idle for 38 s of logical time.
  auto c2 = at(1 + 380);
  s = saver.tick({}, c2);
  EXPECT_EQ(s, testing::reference_pose_saver_state());
  expect_valid(schemas::kStatePoseSaver, s);
}

TEST_F(NodesTest, PoseSaverLastWriterWins) {
  PoseSaverNode saver(desc("pose_saver", Role::PoseSaver, {{"robot", "tars"}}), 0);
  world.robots["tars"].q = JointVector{0.1, 0, 0, 0, 0, 0};
  auto c1 = at(1);
  saver.tick({testing::reference_update_command()}, c1);
  world.robots["tars"].q = JointVector{0.2, 0, 0, 0, 0, 0};
  auto second = testing::reference_update_command();
  second.set("pose_type", "JOINT2");
  auto c2 = at(2);
  saver.tick({second}, c2);
  EXPECT_EQ(world.robots["tars"].poses.find("HOME"), (JointVector{0.2, 0, 0, 0, 0, 0}));
}

TEST_F(NodesTest, PoseSaverWithoutRobotReportsError) {
  PoseSaverNode saver(desc("pose_saver", Role::PoseSaver, {{"robot", "ghost"}}), 0);
  auto c = at(1);
  auto s = saver.tick({testing::reference_update_command()}, c);
  EXPECT_EQ(s.str("done_action"), "error:no_robot_state");
}

// Oracle: pairs * ticks-per-pair.
TEST_F(NodesTest, TighteningTakesFiftyTicksPerPair) {
  const int expected = CellWorld::kBoltPairs * kTightenTicks;
  ASSERT_EQ(expected, 600);
  SmartToolNode tool(desc("smart_tool", Role::SmartTool), 0);
  auto c0 = at(1);
  auto s = tool.tick({tool_cmd("ATTACH", "smart_tool")}, c0);
  EXPECT_EQ(s.str("done_action"), "attached");
  int ticks = 0;
  for (std::uint64_t t = 2; t < 2000; ++t) {
    auto c = at(t);
    s = tool.tick({tool_cmd("TIGHTEN", "", "bolts", 12)}, c);
    expect_valid(schemas::kStateTool, s);
    ++ticks;
    if (s.str("done_action") == "tightened") {
      break;
    }
  }
  EXPECT_EQ(ticks, expected);
  EXPECT_EQ(s.str("bolt_bitmap"), "111111111111");
}

TEST_F(NodesTest, ToolErrors) {
  SmartToolNode tool(desc("smart_tool", Role::SmartTool), 0);
  auto c1 = at(1);
  EXPECT_EQ(tool.tick({tool_cmd("TIGHTEN", "", "bolts", 12)}, c1).list("error_list"), StrList{"no_tool"});
  auto c2 = at(2);
  tool.tick({tool_cmd("ATTACH", "ladder_gripper")}, c2);
  auto c3 = at(3);
  EXPECT_EQ(tool.tick({tool_cmd("ATTACH", "smart_tool")}, c3).list("error_list"), StrList{"occupied"});
  auto c4 = at(4);
  EXPECT_EQ(tool.tick({tool_cmd("TIGHTEN", "", "bolts", 12)}, c4).list("error_list"), StrList{"wrong_tool"});
  EXPECT_EQ(world.attached_effectors().size(), 1u);
}

TEST_F(NodesTest, DetachWhileFloatingIsOk) {
  SmartToolNode tool(desc("smart_tool", Role::SmartTool), 0);
  auto c1 = at(1);
  tool.tick({tool_cmd("ATTACH", "smart_tool")}, c1);
  auto c2 = at(2);
  auto s = tool.tick({tool_cmd("FLOAT")}, c2);
  EXPECT_EQ(s.str("done_action"), "floated");
  auto c3 = at(3);
  s = tool.tick({tool_cmd("DETACH")}, c3);
  EXPECT_TRUE(s.list("error_list").empty());
  EXPECT_EQ(s.str("done_action"), "detached");
  EXPECT_TRUE(s.boolean("floating"));
  EXPECT_EQ(s.str("attached"), "none");
}

class TranslatorTest : public NodesTest {
 protected:
  void SetUp() override {
    NodesTest::SetUp();
    world.mir = MirService({{"outside", {0, 0}}, {"station_a", {3, 4}}}, "outside");
  }
  Message mir_cmd(const std::string& station) {
    auto m = testing::reference_move_command();
    m.set("action", "MOVE_TO").set("robot_type", "MIR100").set("pose_name", Value{station});
    return m;
  }
};

// Oracle: straight-line distance / (speed * dt) ticks.
TEST_F(TranslatorTest, MoveToStationArrives) {
  TranslatorNode tr(desc("mir_translator", Role::Translator), 0);
  const int expected = static_cast<int>(std::ceil(std::hypot(3.0, 4.0) / (1.0 * kTick)));
  Message s;
  int ticks = 0;
  for (std::uint64_t t = 1; t < 200; ++t) {
    auto c = at(t);
    s = tr.tick({mir_cmd("station_a")}, c);
    expect_valid(schemas::kStateMover, s);
    world.mir.step(kTick);
    ++ticks;
    if (s.str("actual_pose") == "station_a") {
      break;
    }
  }
  EXPECT_EQ(ticks, expected + 1);
}

TEST_F(TranslatorTest, UnreachableServiceReportedThenRecovers) {
  TranslatorNode tr(desc("mir_translator", Role::Translator), 0);
  world.mir.set_available(false);
  int unreachable = 0;
  for (std::uint64_t t = 1; t <= 10; ++t) {
    auto c = at(t);
    auto s = tr.tick({mir_cmd("station_a")}, c);
    unreachable += s.list("error_list") == StrList{"mir_unreachable"};
  }
  EXPECT_EQ(unreachable, 10);
  world.mir.set_available(true);
  auto c = at(11);
  auto s = tr.tick({mir_cmd("station_a")}, c);
  EXPECT_TRUE(s.list("error_list").empty());
  EXPECT_TRUE(s.boolean("moving"));
}

TEST_F(TranslatorTest, StatusPolledWithoutCommands) {
  TranslatorNode tr(desc("mir_translator", Role::Translator), 0);
  for (std::uint64_t t = 1; t <= 3; ++t) {
    auto c = at(t);
    auto s = tr.tick({}, c);
    EXPECT_EQ(s.str("actual_pose"), "outside");
  }
}

TEST_F(TranslatorTest, UnknownStation) {
  TranslatorNode tr(desc("mir_translator", Role::Translator), 0);
  auto c = at(1);
  auto s = tr.tick({mir_cmd("atlantis")}, c);
  EXPECT_EQ(s.list("error_list"), StrList{"unknown_station:atlantis"});
}

TEST_F(NodesTest, SafetyStatusInvariant) {
  RfidCamNode cam(desc("rfidcam", Role::RfidCam), 0);
  for (bool verified : {false, true}) {
    for (bool zone : {false, true}) {
      world.operator_verified = verified;
      world.zone_occupied = zone;
      auto c = at(1);
      auto s = cam.tick({}, c);
      EXPECT_EQ(s.boolean("safeguard_stop"), zone && !verified);
    }
  }
}

TEST_F(NodesTest, OperatorShowsInstructionAndReportsFacts) {
  OperatorNode op(desc("operator", Role::Operator), 0);
  Message show;
  show.set("action", "SHOW").set("operator_name", "op").set("instruction", "PLACE_BOLTS");
  world.bolts_placed = true;
  auto c = at(1);
  auto s = op.tick({show}, c);
  EXPECT_EQ(world.screen, "PLACE_BOLTS");
  EXPECT_EQ(s.str("instruction"), "PLACE_BOLTS");
  EXPECT_TRUE(s.boolean("bolts_placed"));
  expect_valid(schemas::kStateOperator, s);
}

TEST_F(NodesTest, DockReportsDockedEffectors) {
  DockNode dock(desc("dock", Role::Dock, {{"holds", "ladder_gripper,oil_tool"}}), 0);
  world.effectors["oil_tool"] = EffectorLocation::Flange;
  auto c = at(1);
  auto s = dock.tick({}, c);
  EXPECT_EQ(s.list("docked"), StrList{"ladder_gripper"});
  EXPECT_EQ(s.str("attached"), "oil_tool");
}

TEST(OperatorModelTest, ScriptedEventFiresAtTime) {
  CellWorld w;
  OperatorModel model(parse_operator_script("at 120 BOLTS_PLACED\n", "s"), 1);
  for (std::uint64_t t = 0; t <= 1300; ++t) {
    model.step(w, t, kTick);
  }
  ASSERT_EQ(model.fired().size(), 1u);
  EXPECT_EQ(model.fired()[0].tick, 1200u);
  EXPECT_TRUE(w.bolts_placed);
}

// Oracle: the same seeded engine drawn once, mapped with 53-bit precision.
TEST(OperatorModelTest, OnPromptDelayIsSeededAndBounded) {
  std::mt19937_64 oracle(42);
  const double u = std::ldexp(static_cast<double>(oracle() >> 11), -53);
  const double delay = 5.0 + u * (10.0 - 5.0);
  ASSERT_GE(delay, 5.0);
  ASSERT_LE(delay, 10.0);

  CellWorld w;
  OperatorModel model(parse_operator_script("on_prompt PLACE_BOLTS BOLTS_PLACED 5 10\n", "s"), 42);
  const std::uint64_t prompt_tick = 7;
  for (std::uint64_t t = 0; t < 300; ++t) {
    if (t == prompt_tick) {
      w.screen = "PLACE_BOLTS";
    }
    model.step(w, t, kTick);
  }
  ASSERT_EQ(model.fired().size(), 1u);
  const double fired_after = static_cast<double>(model.fired()[0].tick - prompt_tick) * kTick;
  EXPECT_GE(fired_after, delay - 1e-9);
  EXPECT_LT(fired_after, delay + kTick);
}

TEST(OperatorModelTest, EmptyScriptFiresNothing) {
  CellWorld w;
  OperatorModel model(parse_operator_script("# nothing\n", "s"), 3);
  w.screen = "PLACE_BOLTS";
  for (std::uint64_t t = 0; t < 100; ++t) {
    model.step(w, t, kTick);
  }
  EXPECT_TRUE(model.fired().empty());
}

TEST(OperatorModelTest, ScriptErrors) {
  EXPECT_THROW(parse_operator_script("at x BADGE\n", "s"), ParseError);
  EXPECT_THROW(parse_operator_script("at 1 DANCE\n", "s"), ParseError);
  EXPECT_THROW(parse_operator_script("on_prompt A BADGE 5 1\n", "s"), ParseError);
}

TEST(PoseRegistryTest, NearestWithTieBreak) {
  PoseRegistry r;
  r.set("B", JointVector{0.01, 0, 0, 0, 0, 0});
  r.set("A", JointVector{-0.01, 0, 0, 0, 0, 0});
  r.set("C", JointVector{0.5, 0, 0, 0, 0, 0});
  EXPECT_EQ(r.nearest_within(JointVector{}, 0.02), "A");
  EXPECT_EQ(r.nearest_within(JointVector{0.5, 0, 0, 0, 0, 0}, 0.02), "C");
  EXPECT_EQ(r.nearest_within(JointVector{0.25, 0, 0, 0, 0, 0}, 0.02), std::nullopt);
}

class RuntimeTest : public NodesTest {
 protected:
  Bus bus{reg};
};

TEST_F(RuntimeTest, PublishesEveryTickAndUnwrapsTypedCommands) {
  std::vector<HubConfig> hubs{HubConfig{"ur", "pc", DomainId::modern(), false, std::nullopt,
                                        {desc("tars", Role::Mover)}}};
  const auto plan = build_topology(hubs, TopologyMode::NodeTypeDirect);
  register_plan_schemas(reg, plan);
  auto d = bus.create_domain(DomainId::modern());
  NodeRuntime rt(bus, plan.nodes.at("tars"), 0);
  const auto& route = plan.controller_commands.at("tars");
  auto pub = bus.advertise(d, route.topic.topic, route.topic.schema, route.topic.qos, {"ctl"});
  auto sub = bus.subscribe(d, plan.nodes.at("tars").state->topic, schemas::kStateMover, QosProfile::keep_last(100),
                           {"ctl"});
  pub.publish(wrap_command(route, "ur", "tars", move_to("FAR")));
  pub.publish(wrap_command(route, "ur", "other", move_to("ZERO")));
  std::vector<Message> states;
  for (std::uint64_t t = 1; t <= 5; ++t) {
    auto c = at(t);
    rt.tick(c);
    for (auto& m : sub.poll()) {
      states.push_back(std::move(m));
    }
  }
  ASSERT_EQ(states.size(), 5u);
  EXPECT_EQ(states[0].nested("echo").str("pose_name"), "FAR");
  rt.stop();
  auto c = at(6);
  rt.tick(c);
  EXPECT_EQ(sub.pending(), 0u);
  rt.restart(7);
  auto c7 = at(7);
  rt.tick(c7);
  auto after = sub.poll();
  ASSERT_EQ(after.size(), 1u);
  EXPECT_TRUE(after[0].boolean("got_reset"));
}

}  // namespace
}  // namespace cellbus
