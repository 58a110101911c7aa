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

#include "cellbus/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

double joint_distance(const JointVector& a, const JointVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

std::optional<JointVector> PoseRegistry::find(const std::string& name) const {
  auto it = poses_.find(name);
  if (it == poses_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<std::string> PoseRegistry::nearest_within(const JointVector& q, double toll) const {
  std::optional<std::string> best;
  double best_d = 0.0;
  for (const auto& [name, p] : poses_) {
    const double d = joint_distance(q, p);
    if (d <= toll && (!best || d < best_d)) {
      best = name;
      best_d = d;
    }
  }
  return best;
}

MirService::MirService(std::map<std::string, Point> stations, std::string start, double speed)
    : stations_(std::move(stations)), speed_(speed) {
  auto it = stations_.find(start);
  if (it == stations_.end()) {
    throw ConfigError("unknown MiR start station '" + start + "'");
  }
  position_ = it->second;
}

std::optional<std::string> MirService::handle(std::string_view request) {
  if (!available_) {
    return std::nullopt;
  }
  const auto lines = detail::split_lines(request);
  if (lines.empty()) {
    return "400 Bad Request\n";
  }
  if (lines[0] == "GET /status") {
    std::string at = "moving";
    for (const auto& [name, p] : stations_) {
      if (p.x == position_.x && p.y == position_.y) {
        at = name;
        break;
      }
    }
    std::string queue;
    for (const auto& q : queue_) {
      queue += (queue.empty() ? "" : ",") + q;
    }
    char battery[32];
    std::snprintf(battery, sizeof battery, "%.2f", battery_);
    return "200 OK\nposition=" + at + "\nmoving=" + (queue_.empty() ? "false" : "true") +
           "\nbattery=" + battery + "\nqueue=" + queue + "\n";
  }
  if (lines[0] == "POST /move") {
    const auto body = parse_key_values(request.substr(std::min(request.size(), lines[0].size() + 1)));
    auto target = body.find("target");
    if (target == body.end()) {
      return "400 Bad Request\n";
    }
    if (stations_.count(target->second) == 0) {
      return "404 Not Found\n";
    }
    queue_.push_back(target->second);
    return "202 Accepted\n";
  }
  return "404 Not Found\n";
}

void MirService::step(double dt) {
  if (queue_.empty()) {
    return;
  }
  const Point goal = stations_.at(queue_.front());
  const double dx = goal.x - position_.x;
  const double dy = goal.y - position_.y;
  const double dist = std::hypot(dx, dy);
  const double reach = speed_ * dt;
  if (dist <= reach) {
    position_ = goal;
    queue_.pop_front();
  } else {
    position_.x += dx / dist * reach;
    position_.y += dy / dist * reach;
  }
  battery_ = std::max(0.0, battery_ - 0.01);
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  for (const auto& line : detail::split_lines(text)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) {
      out[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return out;
}

namespace {

constexpr std::pair<OperatorEvent, std::string_view> kEventNames[] = {
    {OperatorEvent::Badge, "BADGE"},
    {OperatorEvent::ZoneEnter, "ZONE_ENTER"},
    {OperatorEvent::ZoneExit, "ZONE_EXIT"},
    {OperatorEvent::LadderPlaced, "LADDER_PLACED"},
    {OperatorEvent::BoltsPlaced, "BOLTS_PLACED"},
    {OperatorEvent::FiltersPlaced, "FILTERS_PLACED"},
    {OperatorEvent::PipesDone, "PIPES_DONE"},
};

std::uint64_t ticks_for(double seconds, double tick_len) {
  return static_cast<std::uint64_t>(std::ceil(seconds / tick_len - 1e-9));
}

}  // namespace

std::string_view to_string(OperatorEvent e) {
  for (const auto& [ev, name] : kEventNames) {
    if (ev == e) {
      return name;
    }
  }
  return "?";
}

std::optional<OperatorEvent> parse_operator_event(std::string_view text) {
  for (const auto& [ev, name] : kEventNames) {
    if (name == text) {
      return ev;
    }
  }
  return std::nullopt;
}

std::vector<ScriptEntry> parse_operator_script(std::string_view text, const std::string& filename) {
  std::vector<ScriptEntry> out;
  std::size_t line_no = 0;
  auto number = [&](const std::string& s) {
    auto v = detail::parse_double(s);
    if (!v || !std::isfinite(*v) || *v < 0.0) {
      throw ParseError(filename, line_no, "expected a non-negative number, got '" + s + "'");
    }
    return *v;
  };
  auto event = [&](const std::string& s) {
    auto e = parse_operator_event(s);
    if (!e) {
      throw ParseError(filename, line_no, "unknown event '" + s + "'");
    }
    return *e;
  };
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto t = detail::tokenize(detail::strip_comment(raw));
    if (t.empty()) {
      continue;
    }
    ScriptEntry e;
    if (t[0] == "at" && t.size() == 3) {
      e.kind = ScriptEntry::Kind::At;
      e.time = number(t[1]);
      e.event = event(t[2]);
    } else if (t[0] == "on_prompt" && t.size() == 5) {
      e.kind = ScriptEntry::Kind::OnPrompt;
      e.instruction = t[1];
      e.event = event(t[2]);
      e.min_delay = number(t[3]);
      e.max_delay = number(t[4]);
      if (e.max_delay < e.min_delay) {
        throw ParseError(filename, line_no, "delay bound max < min");
      }
    } else {
      throw ParseError(filename, line_no, "expected 'at <t> <EVENT>' or 'on_prompt <INSTR> <EVENT> <min> <max>'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

OperatorModel::OperatorModel(std::vector<ScriptEntry> script, std::uint64_t seed)
    : script_(std::move(script)), prompted_(script_.size(), false), rng_(seed) {}

void OperatorModel::step(CellWorld& world, std::uint64_t tick, double tick_len) {
  for (std::size_t i = 0; i < script_.size(); ++i) {
    const auto& e = script_[i];
    if (prompted_[i]) {
      continue;
    }
    if (e.kind == ScriptEntry::Kind::At && ticks_for(e.time, tick_len) <= tick) {
      prompted_[i] = true;
      pending_.push_back(Pending{tick, order_++, e.event});
    } else if (e.kind == ScriptEntry::Kind::OnPrompt && world.screen == e.instruction) {
      prompted_[i] = true;
      const double delay = e.min_delay + unit_uniform(rng_) * (e.max_delay - e.min_delay);
      pending_.push_back(Pending{tick + ticks_for(delay, tick_len), order_++, e.event});
    }
  }
  std::stable_sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });
  auto due = pending_.begin();
  for (; due != pending_.end() && due->tick <= tick; ++due) {
    world.apply(due->event);
    fired_.push_back(Fired{tick, due->event});
  }
  pending_.erase(pending_.begin(), due);
}

void CellWorld::apply(OperatorEvent e) {
  switch (e) {
    case OperatorEvent::Badge: operator_verified = true; break;
    case OperatorEvent::ZoneEnter: zone_occupied = true; break;
    case OperatorEvent::ZoneExit: zone_occupied = false; break;
    case OperatorEvent::LadderPlaced: ladder_placed = true; break;
    case OperatorEvent::BoltsPlaced: bolts_placed = true; break;
    case OperatorEvent::FiltersPlaced: filters_placed = true; break;
    case OperatorEvent::PipesDone: pipes_done = true; break;
  }
}

int CellWorld::count(const std::vector<bool>& items) const {
  return static_cast<int>(std::count(items.begin(), items.end(), true));
}

std::string CellWorld::bitmap(const std::vector<bool>& items) const {
  std::string s;
  for (bool b : items) {
    s += b ? '1' : '0';
  }
  return s;
}

std::optional<JointVector> CellWorld::joints(const std::string& robot) const {
  auto it = robots.find(robot);
  if (it == robots.end()) {
    return std::nullopt;
  }
  return it->second.q;
}

std::vector<std::string> CellWorld::attached_effectors() const {
  std::vector<std::string> out;
  for (const auto& [name, loc] : effectors) {
    if (loc == EffectorLocation::Flange) {
      out.push_back(name);
    }
  }
  return out;
}

std::string CellWorld::on_flange() const {
  const auto all = attached_effectors();
  return all.empty() ? std::string() : all.front();
}

std::string CellWorld::record() const {
  std::string s;
  char buf[40];
  for (const auto& [name, body] : robots) {
    s += "q:" + name + "=";
    for (std::size_t i = 0; i < body.q.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", body.q[i]);
      s += (i ? "," : "") + std::string(buf);
    }
    s += " ";
  }
  std::string flange, floating;
  for (const auto& [name, loc] : effectors) {
    if (loc == EffectorLocation::Flange) {
      flange += (flange.empty() ? "" : ",") + name;
    } else if (loc == EffectorLocation::Floating) {
      floating += (floating.empty() ? "" : ",") + name;
    }
  }
  s += "flange=" + flange + " floating=" + floating;
  s += " bolts=" + bitmap(bolts) + " filters=" + bitmap(filters);
  s += std::string(" verified=") + (operator_verified ? "1" : "0");
  s += std::string(" zone=") + (zone_occupied ? "1" : "0");
  s += std::string(" safeguard=") + (safeguard_stop() ? "1" : "0");
  s += " facts=" + std::string(ladder_placed ? "L" : "-") + (bolts_placed ? "B" : "-") +
       (filters_placed ? "F" : "-") + (pipes_done ? "P" : "-");
  s += " screen=" + (screen.empty() ? std::string("none") : screen);
  s += " activity=" + (activity.empty() ? std::string("-") : activity);
  return s;
}

}  // namespace cellbus
