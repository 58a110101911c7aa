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

#include <algorithm>
#include <unordered_set>

#include "cellbus/controller.hpp"

namespace cellbus {

namespace {

struct StateHash {
  std::size_t operator()(const ControlState& s) const {
    std::size_t h = 1469598103934665603ULL;
    for (int v : s) {
      h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
      h *= 1099511628211ULL;
    }
    return h;
  }
};

}  // namespace

PlanResult plan(const Model& model, const Supervisor* supervisor, const ControlState& state, const Predicate& goal,
                int horizon) {
  PlanResult result;
  result.plan.horizon = horizon;
  if (goal.eval(state)) return result;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < model.abilities.size(); ++i) {
    if (model.abilities[i].controllable) order.push_back(i);
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return model.abilities[a].name < model.abilities[b].name; });

  struct Node {
    ControlState state;
    std::size_t parent;
    std::size_t ability;
  };
  std::vector<Node> nodes{{state, 0, 0}};
  std::unordered_set<ControlState, StateHash> visited{state};
  std::vector<std::size_t> frontier{0};

  const auto reconstruct = [&](std::size_t leaf) {
    std::vector<std::string> steps;
    for (std::size_t i = leaf; i != 0; i = nodes[i].parent) steps.push_back(model.abilities[nodes[i].ability].name);
    std::reverse(steps.begin(), steps.end());
    return steps;
  };

  for (int depth = 1; depth <= horizon; ++depth) {
    std::vector<std::size_t> next_frontier;
    for (std::size_t f : frontier) {
      for (std::size_t a : order) {
        const ControlState current = nodes[f].state;
        if (!ability_enabled(model, supervisor, a, current)) continue;
        auto next = model.apply(model.abilities[a], current);
        if (!visited.insert(*next).second) continue;
        nodes.push_back(Node{std::move(*next), f, a});
        const std::size_t id = nodes.size() - 1;
        if (goal.eval(nodes[id].state)) {
          result.plan.steps = reconstruct(id);
          return result;
        }
        next_frontier.push_back(id);
      }
    }
    if (next_frontier.empty()) {
      result.status = PlanStatus::Unreachable;
      return result;
    }
    frontier = std::move(next_frontier);
  }
  result.status = frontier.empty() ? PlanStatus::Unreachable : PlanStatus::HorizonExceeded;
  return result;
}

}  // namespace cellbus
