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

#include <atomic>
#include <thread>

#include "cellbus/bridge.hpp"
#include "cellbus/errors.hpp"
#include "fixtures.hpp"

namespace cellbus {
namespace {

Message numbered(int i) {
  auto m = testing::reference_move_command();
  m.set("pose_name", "P" + std::to_string(i));
  return m;
}

class BridgeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    register_standard_schemas(reg);
    modern = bus.create_domain(DomainId::modern());
    legacy = bus.create_domain(DomainId::legacy());
  }

  SchemaRegistry reg;
  Bus bus{reg};
  std::optional<DomainHandle> modern, legacy;
  TopicName cmd = TopicName::parse("/cell/tars/command");
  TopicName other = TopicName::parse("/cell/tars/state");
};

TEST_F(BridgeTest, ForwardsInDeclaredDirection) {
  StaticBridge b(bus, "b", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  auto pub = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"ctl"});
  auto sub = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"tars"});
  pub.publish(testing::reference_move_command());
  EXPECT_EQ(b.tick(), 1u);
  auto got = sub.poll();
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], testing::reference_move_command());
}

TEST_F(BridgeTest, NeverForwardsBackwards) {
  StaticBridge b(bus, "b", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  auto pub = bus.advertise(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"x"});
  auto sub = bus.subscribe(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"y"});
  pub.publish(testing::reference_move_command());
  EXPECT_EQ(b.tick(), 0u);
  EXPECT_TRUE(sub.poll().empty());
}

TEST_F(BridgeTest, PreservesOrder) {
  StaticBridge b(bus, "b", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  auto pub = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"ctl"});
  auto sub = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"tars"});
  for (int i = 0; i < 3; ++i) {
    pub.publish(numbered(i));
  }
  EXPECT_EQ(b.tick(), 3u);
  auto got = sub.poll();
  ASSERT_EQ(got.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(got[static_cast<std::size_t>(i)], numbered(i));
  }
  EXPECT_EQ(b.tick(), 0u);
}

TEST_F(BridgeTest, InvalidMessageDroppedAndCounted) {
  StaticBridge b(bus, "b", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  auto pub = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"ctl"});
  auto sub = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"tars"});
  pub.publish(numbered(1));
  auto bad = numbered(2);
  bad.set("goal_toll", Value{0.0f});
  pub.inject_unchecked(bad);
  EXPECT_EQ(b.tick(), 1u);
  EXPECT_EQ(b.stats().dropped_invalid, 1u);
  pub.publish(numbered(3));
  EXPECT_EQ(b.tick(), 1u);
  EXPECT_EQ(sub.poll().size(), 2u);
}

TEST_F(BridgeTest, RejectsSelfAndMissingDomains) {
  EXPECT_THROW(StaticBridge(bus, "b", DomainId::modern(), DomainId::modern(), cmd, schemas::kCommandMover),
               SelfBridge);
  EXPECT_THROW(StaticBridge(bus, "b", DomainId::modern(), DomainId{"nowhere"}, cmd, schemas::kCommandMover),
               DomainMissing);
}

TEST_F(BridgeTest, PairedBridgesOnOneTopicDoNotLoop) {
  StaticBridge ab(bus, "ab", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  StaticBridge ba(bus, "ba", DomainId::legacy(), DomainId::modern(), cmd, schemas::kCommandMover);
  auto pm = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"pm"});
  auto pl = bus.advertise(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"pl"});
  auto sm = bus.subscribe(*modern, cmd, schemas::kCommandMover, QosProfile::keep_last(100), {"sm"});
  auto sl = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::keep_last(100), {"sl"});
  pm.publish(numbered(1));
  pl.publish(numbered(2));
  for (int i = 0; i < 5; ++i) {
    ab.tick();
    ba.tick();
  }
  EXPECT_EQ(sm.poll().size(), 2u);
  EXPECT_EQ(sl.poll().size(), 2u);
  EXPECT_EQ(ab.stats().forwarded, 1u);
  EXPECT_EQ(ba.stats().forwarded, 1u);
}

TEST_F(BridgeTest, DisabledBridgeDiscards) {
  StaticBridge b(bus, "b", DomainId::modern(), DomainId::legacy(), cmd, schemas::kCommandMover);
  auto pub = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"ctl"});
  auto sub = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"tars"});
  b.set_enabled(false);
  pub.publish(numbered(1));
  EXPECT_EQ(b.tick(), 0u);
  b.set_enabled(true);
  EXPECT_EQ(b.tick(), 0u);
  pub.publish(numbered(2));
  EXPECT_EQ(b.tick(), 1u);
  EXPECT_EQ(sub.poll(), std::vector<Message>{numbered(2)});
}

TEST_F(BridgeTest, DynamicOpensLanesForEachTopic) {
  DynamicBridge d(bus, "dyn", DomainId::modern(), DomainId::legacy());
  auto p1 = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"a"});
  auto p2 = bus.advertise(*modern, other, schemas::kStateMover, QosProfile::command(), {"b"});
  auto s1 = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"x"});
  auto s2 = bus.subscribe(*legacy, other, schemas::kStateMover, QosProfile::command(), {"y"});
  bus.tick();
  d.tick();
  EXPECT_EQ(d.open_lanes().size(), 2u);
  p1.publish(numbered(1));
  p2.publish(testing::reference_mover_state());
  EXPECT_EQ(d.tick(), 2u);
  EXPECT_EQ(s1.poll().size(), 1u);
  EXPECT_EQ(s2.poll().size(), 1u);
}

TEST_F(BridgeTest, DynamicClosesOnInconsistency) {
  DynamicBridge d(bus, "dyn", DomainId::modern(), DomainId::legacy());
  auto pub = bus.advertise(*modern, cmd, schemas::kCommandMover, QosProfile::command(), {"a"});
  auto sub = bus.subscribe(*legacy, cmd, schemas::kCommandMover, QosProfile::command(), {"x"});
  bus.tick();
  d.tick();
  pub.publish(numbered(1));
  EXPECT_EQ(d.tick(), 1u);
  auto bad = numbered(2);
  bad.set("speed_scal", Value{2.0f});
  pub.inject_unchecked(bad);
  d.tick();
  EXPECT_EQ(d.state(), DynamicBridgeState::Closed);
  EXPECT_EQ(d.close_reason(), "inconsistent_message");
  pub.publish(numbered(3));
  EXPECT_EQ(d.tick(), 0u);
  EXPECT_EQ(sub.poll().size(), 1u);
}

TEST(BridgeManifestTest, TextRoundtrip) {
  const std::string text =
      "hub tool_ecu\n"
      "bridge to_legacy /cell/hub/tool_ecu/command HubCommand\n"
      "bridge to_modern /cell/hub/tool_ecu/state HubState\n";
  auto m = BridgeManifest::parse(text, "m");
  ASSERT_EQ(m.hubs.at("tool_ecu").size(), 2u);
  EXPECT_EQ(m.hubs.at("tool_ecu")[1].direction, BridgeDirection::ToModern);
  EXPECT_EQ(m.format(), text);
  EXPECT_THROW(BridgeManifest::parse("bridge sideways /a B\n", "m"), ParseError);
}

TEST(BridgeConcurrentTest, WorkerForwardsEverything) {
  SchemaRegistry reg;
  register_standard_schemas(reg);
  Bus bus(reg, BusOptions{ClockMode::Concurrent, 0.1, 1});
  auto modern = bus.create_domain(DomainId::modern());
  auto legacy = bus.create_domain(DomainId::legacy());
  const auto topic = TopicName::parse("/cell/x/command");
  StaticBridge bridge(bus, "b", DomainId::modern(), DomainId::legacy(), topic, schemas::kCommandMover,
                      QosProfile::keep_last(1000));
  auto sub = bus.subscribe(legacy, topic, schemas::kCommandMover, QosProfile::keep_last(1000), {"s"});
  auto pub = bus.advertise(modern, topic, schemas::kCommandMover, QosProfile::keep_last(1000), {"p"});
  {
    PeriodicWorker worker([&] { bridge.tick(); }, std::chrono::microseconds(200));
    std::jthread producer([&] {
      for (int i = 0; i < 300; ++i) {
        pub.publish(numbered(i));
      }
    });
    producer.join();
    for (int spins = 0; sub.pending() < 300 && spins < 5000; ++spins) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }
  auto got = sub.poll();
  ASSERT_EQ(got.size(), 300u);
  for (int i = 0; i < 300; ++i) {
    EXPECT_EQ(got[static_cast<std::size_t>(i)], numbered(i));
  }
}

}  // namespace
}  // namespace cellbus
