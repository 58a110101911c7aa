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

#include <algorithm>
#include <deque>
#include <random>

#include "cellbus/controller.hpp"
#include "cellbus/errors.hpp"
#include "cellbus/nodes.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace cellbus {
namespace {

const char* const kToolModel = R"(
var ee enum none,smart_tool,ladder_gripper = none
var bolts enum todo,done = todo
pipeline ee from smart_tool StateTool field attached
pipeline bolts from smart_tool StateTool field bolts_tightened discretize <=11.5:todo else:done

ability attach
  guard ee == none
  command smart_tool CommandTool action=ATTACH tool_name=smart_tool end_effector=smart_tool target= count=0
  effect ee = smart_tool
end

ability tighten
  guard ee == smart_tool && bolts == todo
  command smart_tool CommandTool action=TIGHTEN tool_name=smart_tool end_effector= target=bolts count=12
  effect bolts = done
end

operation work
  pre true
  goal bolts == done
end
)";

class ControllerTest : public ::testing::Test {
 protected:
  void SetUp() override { register_standard_schemas(reg); }

  Message tool_state(const std::string& attached, float tightened, const std::optional<Message>& echo) {
    Message m;
    m.set("tool_name", "smart_tool")
        .set("fresh_msg", Value{true})
        .set("t_plus", Value{0.0f})
        .set("got_reset", Value{!echo.has_value()})
        .set("error_list", Value{StrList{}})
        .set("attached", Value{attached})
        .set("floating", Value{false})
        .set("bolt_bitmap", "000000000000")
        .set("filter_bitmap", "000")
        .set("bolts_tightened", Value{tightened})
        .set("filters_tightened", Value{0.0f})
        .set("busy", Value{false})
        .set("done_action", "");
    if (echo) m.set("echo", *echo);
    EXPECT_FALSE(reg.validate(schemas::kStateTool, m));
    return m;
  }

  Observation obs(Message m) { return Observation{"smart_tool", schemas::kStateTool, std::move(m)}; }

  SchemaRegistry reg;
};

TEST_F(ControllerTest, PredicateGrammar) {
  std::vector<Variable> vars{Variable{"a", VarKind::Bool, 0, 1, {}, 0}, Variable{"n", VarKind::Int, 0, 5, {}, 0},
                             Variable{"p", VarKind::Enum, 0, 2, {"HOME", "DOCK", "UNKNOWN"}, 0}};
  auto p = parse_predicate("!(a || n >= 3) && p != DOCK", vars);
  EXPECT_TRUE(p.eval({0, 2, 0}));
  EXPECT_FALSE(p.eval({1, 2, 0}));
  EXPECT_FALSE(p.eval({0, 3, 0}));
  EXPECT_FALSE(p.eval({0, 0, 1}));
  EXPECT_TRUE(parse_predicate("echoed && a", vars).eval({1, 0, 0}, true));
  EXPECT_FALSE(parse_predicate("echoed && a", vars).eval({1, 0, 0}, false));
  EXPECT_EQ(parse_predicate("a && n == 2", vars).variables(), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(parse_predicate("b", vars), ModelError);
  EXPECT_THROW(parse_predicate("n", vars), ModelError);
  EXPECT_THROW(parse_predicate("p < DOCK", vars), ModelError);
  EXPECT_THROW(parse_predicate("p == ELSEWHERE", vars), ModelError);
  EXPECT_THROW(parse_predicate("(a", vars), ModelError);
  EXPECT_THROW(parse_predicate("", vars), ModelError);
}

TEST_F(ControllerTest, ModelParses) {
  const auto m = parse_model(kToolModel, "tool.model", reg);
  ASSERT_EQ(m.variables.size(), 2u);
  ASSERT_EQ(m.abilities.size(), 2u);
  EXPECT_EQ(m.abilities[0].command->message.str("action"), "ATTACH");
  EXPECT_EQ(m.abilities[1].command->message.f32("count"), 12.0f);
  EXPECT_EQ(m.pipelines[1].stages.back().kind, Stage::Kind::Discretize);
  EXPECT_EQ(m.format(m.initial_state()), "ee=none bolts=todo");
  // Default completion waits for the echo.
  EXPECT_FALSE(m.abilities[0].completion.eval({1, 0}, false));
  EXPECT_TRUE(m.abilities[0].completion.eval({1, 0}, true));
}

TEST_F(ControllerTest, ModelErrorsCarryLine) {
  const auto line_of = [&](const std::string& text) -> std::size_t {
    try {
      parse_model(text, "bad.model", reg);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("var a bool\nspec s b\n"), 2u);
  EXPECT_EQ(line_of("var a bool\nvar a bool\n"), 2u);
  EXPECT_EQ(line_of("var a bool\nability x\n  guard a\n"), 2u);
  EXPECT_EQ(line_of("var a bool\nability x\n  guard a\n  command t CommandMover nope=1\nend\n"), 4u);
  EXPECT_EQ(line_of("var a bool\nability x\n  guard a\n  command t CommandMover action=MOVEJ\nend\n"), 4u);
  EXPECT_EQ(line_of("var a bool\nability x\n  uncontrollable\n  effect a = 2\nend\n"), 4u);
  EXPECT_EQ(line_of("var a bool\nability x\n  effect a = true\nend\n"), 4u);
  EXPECT_EQ(line_of("var e enum x,y\npipeline e from t StateMover field moving\n"), 2u);
  EXPECT_EQ(line_of("var e enum x,y\npipeline e from t StateMover field t_plus discretize <=1:x else:z\n"), 2u);
  EXPECT_EQ(line_of("var a bool\noperation o\n  pre a\nend\n"), 4u);
  EXPECT_EQ(line_of("var a bool\nbogus\n"), 2u);
}

TEST_F(ControllerTest, GeneratedPipelineNames) {
  const auto pipes = generate_pipelines(reg, schemas::kStateMover, DomainId::modern(), TopicName::parse("/cell/tars/state"));
  std::vector<std::string> names;
  for (const auto& p : pipes) names.push_back(p.target);
  for (const char* expected : {"cell_tars_state_moving", "cell_tars_state_fresh_msg", "cell_tars_state_actual_pose",
                               "cell_tars_state_t_plus", "cell_tars_state_echo_pose_name"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  }
  EXPECT_EQ(std::find(names.begin(), names.end(), "cell_tars_state_error_list"), names.end());

  const auto saver = generate_pipelines(reg, schemas::kStatePoseSaver, DomainId::modern(),
                                        TopicName::parse("/cell/pose_saver/state"));
  EXPECT_TRUE(std::any_of(saver.begin(), saver.end(),
                          [](const Pipeline& p) { return p.target == "cell_pose_saver_state_done_action"; }));
}

TEST_F(ControllerTest, DiscretizedAgeMatchesReferenceRows) {
  const auto m = parse_model(
      "var age enum fresh,stale = stale\n"
      "pipeline age from tars StateMover field t_plus discretize <=1.0:fresh else:stale\n"
      "var saver_age enum fresh,stale = fresh\n"
      "pipeline saver_age from saver StatePoseSaver field t_plus discretize <=1.0:fresh else:stale\n",
      "m", reg);
  Estimator est(m);
  auto s = est.update({{"tars", schemas::kStateMover, testing::reference_mover_state()},
                       {"saver", schemas::kStatePoseSaver, testing::reference_pose_saver_state()}},
                      m.initial_state());
  EXPECT_EQ(m.format(s), "age=fresh saver_age=stale");
  // Agrees with the freshness flag carried by each row.
  EXPECT_TRUE(testing::reference_mover_state().boolean("fresh_msg"));
  EXPECT_FALSE(testing::reference_pose_saver_state().boolean("fresh_msg"));
}

TEST_F(ControllerTest, EstimatorHoldsAndUpdates) {
  const auto m = parse_model("var moving bool\npipeline moving from tars StateMover field moving\n", "m", reg);
  Estimator est(m);
  const ControlState prev{1};
  EXPECT_EQ(estimate_state(est, {}, prev), prev);
  auto state = testing::reference_mover_state();
  state.set("moving", Value{true});
  EXPECT_EQ(estimate_state(est, {{"tars", schemas::kStateMover, state}}, {0}), ControlState{1});
  EXPECT_EQ(estimate_state(est, {{"other", schemas::kStateMover, state}}, {0}), ControlState{0});
}

TEST_F(ControllerTest, UnknownLabelKeepsValue) {
  const auto m = parse_model("var pose enum HOME,DOCK\npipeline pose from tars StateMover field actual_pose\n", "m", reg);
  Estimator est(m);
  auto s = est.update({{"tars", schemas::kStateMover, testing::reference_mover_state()}}, {1});
  EXPECT_EQ(s, ControlState{1});
  EXPECT_EQ(est.rejected(), 1u);
}

Message safety(bool zone) {
  Message m;
  m.set("operator_verified", Value{false}).set("zone_occupied", Value{zone}).set("safeguard_stop", Value{zone});
  return m;
}

TEST_F(ControllerTest, AggregateAnyOverWindow) {
  const auto m = parse_model("var z bool\npipeline z from cam SafetyStatus field zone_occupied aggregate any 3\n", "m", reg);
  Estimator est(m);
  ControlState s{0};
  for (bool v : {false, true, false}) s = est.update({{"cam", schemas::kSafetyStatus, safety(v)}}, s);
  EXPECT_EQ(s, ControlState{1});
}

// Oracle: recompute each aggregate over the explicit tail of the history.
TEST_F(ControllerTest, AggregatesMatchBruteForceWindow) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    const auto m = parse_model("var any bool\nvar all bool\nvar cnt int 0 10\nvar last bool\n"
                               "pipeline any from cam SafetyStatus field zone_occupied aggregate any " + std::to_string(k) +
                                   "\npipeline all from cam SafetyStatus field zone_occupied aggregate all " +
                                   std::to_string(k) +
                                   "\npipeline cnt from cam SafetyStatus field zone_occupied aggregate count " +
                                   std::to_string(k) +
                                   "\npipeline last from cam SafetyStatus field zone_occupied aggregate latest " +
                                   std::to_string(k) + "\n",
                               "m", reg);
    Estimator est(m);
    std::vector<bool> history;
    ControlState s = m.initial_state();
    for (int i = 0; i < 30; ++i) {
      const bool v = (rng() & 1U) != 0;
      history.push_back(v);
      s = est.update({{"cam", schemas::kSafetyStatus, safety(v)}}, s);
      const auto from = history.size() > static_cast<std::size_t>(k) ? history.size() - static_cast<std::size_t>(k) : 0;
      int count = 0;
      for (std::size_t j = from; j < history.size(); ++j) count += history[j] ? 1 : 0;
      const int n = static_cast<int>(history.size() - from);
      ASSERT_EQ(s[0], count > 0 ? 1 : 0);
      ASSERT_EQ(s[1], count == n ? 1 : 0);
      ASSERT_EQ(s[2], count);
      ASSERT_EQ(s[3], v ? 1 : 0);
    }
  }
}

TEST_F(ControllerTest, NoSpecsLeavesAbilitiesUnchanged) {
  const auto m = parse_model(kToolModel, "m", reg);
  const auto sup = synthesize_guards(m, m.initial_state());
  EXPECT_EQ(sup.forbidden_size, 0u);
  for (std::size_t a = 0; a < m.abilities.size(); ++a) EXPECT_TRUE(sup.blocked[a].empty());
}

// Oracle: the four states enumerated by hand.
TEST_F(ControllerTest, FourStateSynthesis) {
  const auto m = parse_model(
      "var a bool\nvar b bool\n"
      "ability u\n  guard a && !b\n  uncontrollable\n  effect b = true\nend\n"
      "ability set_a\n  guard !a\n  command t CommandOperator action=A operator_name=o instruction=x\n  effect a = true\nend\n"
      "spec both a && b\n",
      "m", reg);
  const auto sup = synthesize_guards(m, m.initial_state());
  EXPECT_EQ(sup.forbidden_size, 2u);
  EXPECT_TRUE(sup.is_forbidden({1, 1}));
  EXPECT_TRUE(sup.is_forbidden({1, 0}));
  EXPECT_FALSE(sup.is_forbidden({0, 0}));
  EXPECT_FALSE(sup.is_forbidden({0, 1}));
  const std::size_t set_a = 1;
  EXPECT_FALSE(ability_enabled(m, &sup, set_a, {0, 0}));
  EXPECT_FALSE(ability_enabled(m, &sup, set_a, {0, 1}));
  EXPECT_TRUE(ability_enabled(m, nullptr, set_a, {0, 0}));
  // Uncontrollable guards are untouched.
  EXPECT_TRUE(sup.allows(0, {1, 0}));
}

TEST_F(ControllerTest, InitialForbiddenThrows) {
  const auto m = parse_model("var a bool = true\nspec bad a\n", "m", reg);
  EXPECT_THROW(synthesize_guards(m, m.initial_state()), InitialForbidden);
}

TEST_F(ControllerTest, OversizedSpaceRejected) {
  const auto m = parse_model("var n int 0 999\nvar k int 0 999\nvar j int 0 9\nspec bad n == 3\n", "m", reg);
  EXPECT_THROW(synthesize_guards(m, m.initial_state()), ModelError);
}

TEST(SynthesisProperty, RandomModelsNeverReachForbidden) {
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 40) {
    auto r = testing::random_model(rng, 6, 10, 3, 0.3);
    Supervisor sup;
    try {
      sup = synthesize_guards(r.model, r.model.initial_state());
    } catch (const InitialForbidden&) {
      continue;
    }
    ++checked;
    const auto reach = testing::oracle_reachable(
        r, [&](std::size_t a, std::uint32_t s) { return sup.allows(a, r.to_state(s)); });
    for (auto s : reach) ASSERT_FALSE(r.is_forbidden(s));
  }
}

TEST_F(ControllerTest, PlanForGoalAlreadyTrueIsEmpty) {
  const auto m = parse_model(kToolModel, "m", reg);
  auto r = plan(m, nullptr, {1, 1}, m.operations[0].goal);
  EXPECT_TRUE(r.found());
  EXPECT_TRUE(r.plan.steps.empty());
}

TEST_F(ControllerTest, AttachThenTighten) {
  const auto m = parse_model(kToolModel, "m", reg);
  auto r = plan(m, nullptr, m.initial_state(), m.operations[0].goal);
  ASSERT_TRUE(r.found());
  EXPECT_EQ(r.plan.steps, (std::vector<std::string>{"attach", "tighten"}));
  EXPECT_EQ(plan(m, nullptr, m.initial_state(), m.operations[0].goal, 1).status, PlanStatus::HorizonExceeded);
  EXPECT_EQ(plan(m, nullptr, {2, 0}, m.operations[0].goal).status, PlanStatus::Unreachable);
}

TEST(PlannerProperty, LengthMatchesBreadthFirstOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    auto r = testing::random_model(rng);
    const auto expected = testing::oracle_shortest(r, r.initial, kDefaultHorizon);
    const auto got = plan(r.model, nullptr, r.model.initial_state(), r.goal_predicate);
    ASSERT_EQ(got.found(), expected.has_value()) << "model " << i;
    if (!expected) continue;
    ASSERT_EQ(static_cast<int>(got.plan.steps.size()), *expected) << "model " << i;
    std::uint32_t s = r.initial;
    for (const auto& step : got.plan.steps) {
      std::size_t a = 0;
      while (r.model.abilities[a].name != step) ++a;
      ASSERT_TRUE(r.abilities[a].guard.holds(s));
      s = r.abilities[a].apply(s);
    }
    ASSERT_TRUE(r.goal.holds(s));
  }
}

TEST_F(ControllerTest, TiesBreakByName) {
  const auto m = parse_model(
      "var a bool\n"
      "ability zeta\n  command t CommandOperator action=Z operator_name=o instruction=x\n  effect a = true\nend\n"
      "ability alpha\n  command t CommandOperator action=A operator_name=o instruction=x\n  effect a = true\nend\n",
      "m", reg);
  auto r = plan(m, nullptr, m.initial_state(), parse_predicate("a", m.variables));
  EXPECT_EQ(r.plan.steps, std::vector<std::string>{"alpha"});
}

TEST_F(ControllerTest, HandshakeProgression) {
  Controller c(parse_model(kToolModel, "m", reg), reg);
  auto out = c.tick(1, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ability, "attach");
  EXPECT_TRUE(out[0].first);
  const Message attach = out[0].command;

  // No echo yet: the same command again.
  out = c.tick(2, {obs(tool_state("none", 0, std::nullopt))});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].first);
  EXPECT_EQ(out[0].command, attach);

  // Echo without the predicted effect is not completion.
  out = c.tick(3, {obs(tool_state("none", 0, attach))});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ability, "attach");

  out = c.tick(4, {obs(tool_state("smart_tool", 0, attach))});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ability, "tighten");
  const Message tighten = out[0].command;

  out = c.tick(5, {obs(tool_state("smart_tool", 12, tighten))});
  EXPECT_TRUE(out.empty());
  EXPECT_TRUE(c.finished());
  const auto log = c.drain_log();
  EXPECT_NE(std::find(log.begin(), log.end(), "plan 1 work attach,tighten"), log.end());
  EXPECT_NE(std::find(log.begin(), log.end(), "done 5 work ee=smart_tool bolts=done"), log.end());
}

TEST_F(ControllerTest, ReplansWhenEnvironmentChanges) {
  Controller c(parse_model(kToolModel, "m", reg), reg);
  c.tick(1, {});
  // The tool turns out to be attached already (e.g. by hand): attach
  // completes on echo and the shorter branch follows.
  const auto attach = c.model().abilities[0].command->message;
  auto out = c.tick(2, {obs(tool_state("smart_tool", 0, attach))});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ability, "tighten");
  const auto expected = plan(c.model(), &c.supervisor(), c.state(), c.model().operations[0].goal);
  EXPECT_EQ(expected.plan.steps, std::vector<std::string>{"tighten"});
}

TEST_F(ControllerTest, StuckAfterLimit) {
  Controller c(parse_model(kToolModel, "m", reg), reg, ControllerOptions{kDefaultHorizon, 5});
  const auto ladder = obs(tool_state("ladder_gripper", 0, std::nullopt));
  for (std::uint64_t t = 1; t <= 5; ++t) EXPECT_NO_THROW(c.tick(t, {ladder}));
  EXPECT_THROW(c.tick(6, {ladder}), OperationStuck);
}

TEST_F(ControllerTest, InactiveOperationsNeverGetStuck) {
  auto text = std::string(kToolModel);
  text.replace(text.find("pre true"), 8, "pre ee == none");
  Controller c(parse_model(text, "m", reg), reg, ControllerOptions{kDefaultHorizon, 5});
  const auto ladder = obs(tool_state("ladder_gripper", 0, std::nullopt));
  for (std::uint64_t t = 1; t <= 50; ++t) EXPECT_TRUE(c.tick(t, {ladder}).empty());
}

TEST_F(ControllerTest, OneAbilityPerNode) {
  const auto m = parse_model(
      "var a bool\nvar b bool\n"
      "ability set_a\n  command op CommandOperator action=A operator_name=o instruction=x\n  effect a = true\nend\n"
      "ability set_b\n  command op CommandOperator action=B operator_name=o instruction=x\n  effect b = true\nend\n"
      "operation first\n  pre true\n  goal a\nend\n"
      "operation second\n  pre true\n  goal b\nend\n",
      "m", reg);
  Controller c(m, reg);
  auto out = c.tick(1, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].operation, "first");
  EXPECT_EQ(c.status(1), OperationStatus::Idle);
}

TEST_F(ControllerTest, SynthesizedGuardHoldsOffPlanning) {
  const auto m = parse_model(
      "var placed bool\nvar bolts enum todo,done\n"
      "ability u_place\n  guard !placed\n  uncontrollable\n  effect placed = true\nend\n"
      "ability tighten\n  command smart_tool CommandTool action=TIGHTEN tool_name=t end_effector= target=bolts count=12\n"
      "  effect bolts = done\nend\n"
      "spec early bolts == done && !placed\n"
      "operation work\n  pre true\n  goal bolts == done\nend\n",
      "m", reg);
  Controller c(m, reg);
  EXPECT_TRUE(c.tick(1, {}).empty());
  EXPECT_EQ(plan(c.model(), &c.supervisor(), {0, 0}, c.model().operations[0].goal).status, PlanStatus::Unreachable);
  EXPECT_EQ(plan(c.model(), &c.supervisor(), {1, 0}, c.model().operations[0].goal).plan.steps,
            std::vector<std::string>{"tighten"});
}

TEST_F(ControllerTest, PortRoutesThroughEveryTopology) {
  CellWorld world;
  world.effectors = {{"smart_tool", EffectorLocation::Dock}};
  for (auto mode : kAllTopologies) {
    SchemaRegistry r;
    register_standard_schemas(r);
    std::vector<HubConfig> hubs{HubConfig{"tool_ecu", "pc", DomainId::modern(), false, std::nullopt,
                                          {NodeDescriptor{"smart_tool", Role::SmartTool, 0.1, "tool_ecu", {}}}}};
    const auto topo = build_topology(hubs, mode);
    register_plan_schemas(r, topo);
    Bus bus(r);
    bus.create_domain(DomainId::modern());
    const auto model = parse_model(kToolModel, "m", r);
    ControllerPort port(bus, topo, model);
    Controller ctl(model, r);
    CellWorld w = world;
    NodeRuntime node(bus, topo.nodes.at("smart_tool"), 0);
    std::vector<Distributor> dists;
    std::vector<Collector> cols;
    for (const auto& d : topo.distributors) dists.emplace_back(bus, d);
    for (const auto& col : topo.collectors) cols.emplace_back(bus, col);
    std::uint64_t t = 0;
    for (t = 1; t < 1000 && !ctl.finished(); ++t) {
      bus.tick();
      port.publish(ctl.tick(t, port.poll()));
      for (auto& d : dists) d.tick();
      NodeContext ctx{w, t, 0.1};
      node.tick(ctx);
      for (auto& col : cols) col.tick(ctx.now());
    }
    EXPECT_TRUE(ctl.finished()) << to_string(mode);
    EXPECT_EQ(w.count(w.bolts), CellWorld::kBoltPairs) << to_string(mode);
  }
}

}  // namespace
}  // namespace cellbus
