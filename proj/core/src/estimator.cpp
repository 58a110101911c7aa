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
#include <cmath>

#include "cellbus/controller.hpp"
#include "cellbus/errors.hpp"

namespace cellbus {

Estimator::Estimator(const Model& model) : model_(model) {
  for (const auto& p : model.pipelines) {
    Lane lane;
    lane.pipeline = &p;
    lane.target = *model.find_variable(p.target);
    for (const auto& s : p.stages) {
      if (s.kind == Stage::Kind::Aggregate) lane.windows.emplace_back();
    }
    lanes_.push_back(std::move(lane));
  }
}

std::optional<Sample> Estimator::run(Lane& lane, const Message& message) {
  std::optional<Sample> sample;
  std::size_t window = 0;
  for (const auto& stage : lane.pipeline->stages) {
    switch (stage.kind) {
      case Stage::Kind::ExtractField: {
        const Value* v = message.find_path(stage.path);
        if (v == nullptr) return std::nullopt;
        if (const auto* b = std::get_if<bool>(v)) sample = *b;
        else if (const auto* f = std::get_if<float>(v)) sample = static_cast<double>(*f);
        else if (const auto* s = std::get_if<std::string>(v)) sample = *s;
        else return std::nullopt;
        break;
      }
      case Stage::Kind::Aggregate: {
        auto& w = lane.windows[window++];
        w.push_back(*sample);
        while (w.size() > stage.window) w.pop_front();
        const auto truthy = [](const Sample& s) { return std::get<bool>(s); };
        switch (stage.fn) {
          case Stage::Fn::Any: sample = std::any_of(w.begin(), w.end(), truthy); break;
          case Stage::Fn::All: sample = std::all_of(w.begin(), w.end(), truthy); break;
          case Stage::Fn::Latest: sample = w.back(); break;
          case Stage::Fn::Count:
            sample = static_cast<double>(std::count_if(w.begin(), w.end(), truthy));
            break;
        }
        break;
      }
      case Stage::Kind::Discretize: {
        const double x = std::get<double>(*sample);
        std::string label = stage.otherwise;
        for (const auto& [bound, l] : stage.thresholds) {
          if (x <= bound) {
            label = l;
            break;
          }
        }
        sample = label;
        break;
      }
    }
  }
  return sample;
}

std::optional<int> Estimator::convert(const Variable& var, const Sample& sample) const {
  switch (var.kind) {
    case VarKind::Bool:
      if (const auto* b = std::get_if<bool>(&sample)) return *b ? 1 : 0;
      return std::nullopt;
    case VarKind::Int:
      if (const auto* d = std::get_if<double>(&sample)) {
        if (!std::isfinite(*d)) return std::nullopt;
        const double clamped = std::clamp(std::round(*d), static_cast<double>(var.lo), static_cast<double>(var.hi));
        return static_cast<int>(clamped);
      }
      return std::nullopt;
    case VarKind::Enum:
      if (const auto* s = std::get_if<std::string>(&sample)) return var.parse(*s);
      return std::nullopt;
  }
  return std::nullopt;
}

ControlState Estimator::update(const std::vector<Observation>& observations, ControlState prev) {
  for (const auto& obs : observations) {
    for (auto& lane : lanes_) {
      if (lane.pipeline->source.key() != obs.source || lane.pipeline->source.schema != obs.schema) continue;
      auto sample = run(lane, obs.message);
      if (!sample) continue;
      if (auto v = convert(model_.variables[lane.target], *sample)) {
        prev[lane.target] = *v;
      } else {
        ++rejected_;
      }
    }
  }
  return prev;
}

ControlState estimate_state(Estimator& estimator, const std::vector<Observation>& observations,
                            const ControlState& prev) {
  return estimator.update(observations, prev);
}

namespace {

std::string topic_prefix(const TopicName& topic) {
  std::string out = topic.str().substr(1);
  std::replace(out.begin(), out.end(), '/', '_');
  return out;
}

bool scalar(FieldKind k) { return k == FieldKind::Str || k == FieldKind::Bool || k == FieldKind::F32; }

}  // namespace

std::vector<Pipeline> generate_pipelines(const SchemaRegistry& registry, const SchemaId& schema,
                                         const DomainId& domain, const TopicName& topic) {
  const auto& s = registry.get(schema);
  const std::string prefix = topic_prefix(topic);
  PipelineSource source{"", domain, topic, schema};
  std::vector<Pipeline> out;
  const auto add = [&](const std::string& path, const std::string& suffix) {
    Stage extract;
    extract.path = path;
    out.push_back(Pipeline{source, {extract}, prefix + "_" + suffix});
  };
  for (const auto& f : s.fields) {
    if (scalar(f.type.kind)) {
      add(f.name, f.name);
    } else if (f.type.kind == FieldKind::Nested) {
      for (const auto& inner : registry.get(f.type.nested).fields) {
        if (scalar(inner.type.kind)) add(f.name + "." + inner.name, f.name + "_" + inner.name);
      }
    }
  }
  return out;
}

}  // namespace cellbus
