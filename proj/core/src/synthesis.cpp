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
#include <limits>

#include "cellbus/controller.hpp"
#include "cellbus/errors.hpp"

namespace cellbus {

StateSpace::StateSpace(const std::vector<Variable>& variables) {
  for (const auto& v : variables) {
    lo_.push_back(v.lo);
    radix_.push_back(v.domain_size());
    if (size_ > std::numeric_limits<std::size_t>::max() / radix_.back()) {
      size_ = std::numeric_limits<std::size_t>::max();
    } else if (size_ != std::numeric_limits<std::size_t>::max()) {
      size_ *= radix_.back();
    }
  }
}

std::size_t StateSpace::index(const ControlState& state) const {
  std::size_t idx = 0;
  for (std::size_t i = radix_.size(); i-- > 0;) {
    idx = idx * radix_[i] + static_cast<std::size_t>(state[i] - lo_[i]);
  }
  return idx;
}

ControlState StateSpace::decode(std::size_t index) const {
  ControlState s(radix_.size());
  for (std::size_t i = 0; i < radix_.size(); ++i) {
    s[i] = lo_[i] + static_cast<int>(index % radix_[i]);
    index /= radix_[i];
  }
  return s;
}

bool Supervisor::is_forbidden(const ControlState& state) const {
  return space && forbidden[space->index(state)];
}

bool Supervisor::allows(std::size_t ability, const ControlState& state) const {
  if (!space || ability >= blocked.size() || blocked[ability].empty()) return true;
  return !blocked[ability][space->index(state)];
}

bool ability_enabled(const Model& model, const Supervisor* supervisor, std::size_t ability,
                     const ControlState& state) {
  const Ability& a = model.abilities[ability];
  if (!a.guard.eval(state)) return false;
  if (!model.apply(a, state)) return false;
  return supervisor == nullptr || supervisor->allows(ability, state);
}

Supervisor synthesize_guards(const Model& model, const ControlState& initial, std::size_t max_states) {
  Supervisor sup;
  sup.blocked.resize(model.abilities.size());
  if (model.specs.empty()) return sup;

  StateSpace space(model.variables);
  if (space.size() > max_states) {
    throw ModelError("state space of " + std::to_string(space.size()) + " states exceeds the explicit limit of " +
                     std::to_string(max_states));
  }
  const std::size_t n = space.size();
  sup.forbidden.assign(n, false);

  std::vector<std::pair<std::size_t, std::size_t>> uncontrollable;  // (src, dst)
  for (std::size_t i = 0; i < n; ++i) {
    const ControlState s = space.decode(i);
    if (model.violated_spec(s)) sup.forbidden[i] = true;
    for (const auto& a : model.abilities) {
      if (a.controllable || !a.guard.eval(s)) continue;
      if (auto next = model.apply(a, s)) uncontrollable.emplace_back(i, space.index(*next));
    }
  }

  // Backward closure over uncontrollable edges.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [src, dst] : uncontrollable) {
      if (sup.forbidden[dst] && !sup.forbidden[src]) {
        sup.forbidden[src] = true;
        changed = true;
      }
    }
  }
  sup.forbidden_size = static_cast<std::size_t>(std::count(sup.forbidden.begin(), sup.forbidden.end(), true));

  if (sup.forbidden[space.index(initial)]) {
    throw InitialForbidden("initial state lies in the extended forbidden set: " + model.format(initial));
  }

  for (std::size_t a = 0; a < model.abilities.size(); ++a) {
    const Ability& ab = model.abilities[a];
    if (!ab.controllable) continue;
    std::vector<bool> blocked(n, false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const ControlState s = space.decode(i);
      if (!ab.guard.eval(s)) continue;
      auto next = model.apply(ab, s);
      if (next && sup.forbidden[space.index(*next)]) {
        blocked[i] = true;
        any = true;
      }
    }
    if (any) sup.blocked[a] = std::move(blocked);
  }
  sup.space = std::move(space);
  return sup;
}

}  // namespace cellbus
