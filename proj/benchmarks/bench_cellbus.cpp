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

#include <benchmark/benchmark.h>

#include "cellbus/bus.hpp"
#include "cellbus/codec.hpp"
#include "cellbus/controller.hpp"
#include "cellbus/runner.hpp"

namespace {

using namespace cellbus;

Message move_command() {
  Message m;
  m.set("action", "MOVEJ")
      .set("robot_type", "UR10")
      .set("robot_name", "TARS")
      .set("pose_type", "JOINT")
      .set("pose_name", "HOME")
      .set("speed_scal", Value{0.1f})
      .set("acc_scal", Value{0.2f})
      .set("goal_toll", Value{0.01f});
  return m;
}

const Scenario& assembly() {
  static const Scenario sc = load_scenario(CELLBUS_SCENARIO_DIR);
  return sc;
}

void BM_PublishPoll(benchmark::State& state) {
  SchemaRegistry reg;
  register_standard_schemas(reg);
  Bus bus(reg);
  auto d = bus.create_domain(DomainId::modern());
  const auto topic = TopicName::parse("/cell/tars/command");
  auto pub = bus.advertise(d, topic, schemas::kCommandMover, QosProfile::command(), {"p"});
  std::vector<Subscriber> subs;
  for (int i = 0; i < state.range(0); ++i) {
    subs.push_back(bus.subscribe(d, topic, schemas::kCommandMover, QosProfile::command(), {"s" + std::to_string(i)}));
  }
  const auto m = move_command();
  for (auto _ : state) {
    pub.publish(m);
    for (auto& s : subs) benchmark::DoNotOptimize(s.poll());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PublishPoll)->Arg(1)->Arg(8);

void BM_Encode(benchmark::State& state) {
  const auto m = move_command();
  for (auto _ : state) benchmark::DoNotOptimize(encode(m));
}
BENCHMARK(BM_Encode);

void BM_Decode(benchmark::State& state) {
  SchemaRegistry reg;
  register_standard_schemas(reg);
  const auto bytes = encode(move_command());
  for (auto _ : state) benchmark::DoNotOptimize(decode(reg, schemas::kCommandMover, bytes));
}
BENCHMARK(BM_Decode);

void BM_SynthesizeAssembly(benchmark::State& state) {
  const auto& model = assembly().model;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_guards(model, model.initial_state()));
}
BENCHMARK(BM_SynthesizeAssembly)->Unit(benchmark::kMillisecond);

void BM_PlanAssemblyOperations(benchmark::State& state) {
  const auto& model = assembly().model;
  const auto sup = synthesize_guards(model, model.initial_state());
  for (auto _ : state) {
    for (const auto& op : model.operations) {
      benchmark::DoNotOptimize(plan(model, &sup, model.initial_state(), op.goal));
    }
  }
}
BENCHMARK(BM_PlanAssemblyOperations)->Unit(benchmark::kMicrosecond);

void BM_RunAssembly(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run(assembly()));
}
BENCHMARK(BM_RunAssembly)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
