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

#include "cellbus/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  auto v = detail::parse_int(s);
  if (!v || *v < 0) {
    return std::nullopt;
  }
  return static_cast<std::uint64_t>(*v);
}

struct KeyValue {
  std::string key;
  std::string value;
};

std::optional<KeyValue> split_key_value(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0) {
    return std::nullopt;
  }
  return KeyValue{token.substr(0, eq), token.substr(eq + 1)};
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

std::string FaultSpec::str() const {
  std::string kind_name;
  switch (kind) {
    case Kind::Bridge: kind_name = "bridge"; break;
    case Kind::Node: kind_name = "node"; break;
    case Kind::Drop: kind_name = "drop"; break;
    case Kind::Service: kind_name = "service"; break;
  }
  std::string s = kind_name + ":" + target;
  if (kind == Kind::Drop) {
    s += ":" + format_number(probability);
  }
  return s + "@" + std::to_string(start) + "+" + std::to_string(duration);
}

FaultSpec parse_fault(std::string_view text) {
  const std::string t(text);
  const auto fail = [&](const std::string& what) -> FaultSpec {
    throw ConfigError("fault '" + t + "': " + what);
  };
  const auto at = t.rfind('@');
  const auto plus = t.rfind('+');
  if (at == std::string::npos || plus == std::string::npos || plus < at) {
    return fail("expected <kind>:<target>[:<p>]@<start>+<duration>");
  }
  FaultSpec f;
  auto start = parse_u64(t.substr(at + 1, plus - at - 1));
  auto duration = parse_u64(t.substr(plus + 1));
  if (!start || !duration) {
    return fail("bad start or duration");
  }
  if (*duration == 0) {
    return fail("duration must be positive");
  }
  f.start = *start;
  f.duration = *duration;

  const std::string head = t.substr(0, at);
  const auto colon = head.find(':');
  if (colon == std::string::npos) {
    return fail("missing target");
  }
  const std::string kind = head.substr(0, colon);
  std::string target = head.substr(colon + 1);
  if (kind == "bridge") {
    f.kind = FaultSpec::Kind::Bridge;
  } else if (kind == "node") {
    f.kind = FaultSpec::Kind::Node;
  } else if (kind == "service") {
    f.kind = FaultSpec::Kind::Service;
  } else if (kind == "drop") {
    f.kind = FaultSpec::Kind::Drop;
    const auto last = target.rfind(':');
    if (last == std::string::npos) {
      return fail("drop needs a probability");
    }
    auto p = detail::parse_double(target.substr(last + 1));
    if (!p || !(*p >= 0.0 && *p <= 1.0)) {
      return fail("probability must lie in [0,1]");
    }
    f.probability = *p;
    target = target.substr(0, last);
    if (!TopicName::is_valid(target)) {
      return fail("invalid topic '" + target + "'");
    }
  } else {
    return fail("unknown kind '" + kind + "'");
  }
  if (target.empty()) {
    return fail("empty target");
  }
  f.target = target;
  return f;
}

SchemaRegistry Scenario::registry() const {
  SchemaRegistry r;
  register_standard_schemas(r);
  for (const auto& s : extra_schemas) {
    r.register_schema(s);
  }
  return r;
}

std::vector<HubConfig> parse_hubs(std::string_view text, const std::string& filename) {
  std::vector<HubConfig> hubs;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) { throw ParseError(filename, line_no, what); };
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto tok = detail::tokenize(detail::strip_comment(raw));
    if (tok.empty()) {
      continue;
    }
    if (tok[0] == "hub") {
      if (tok.size() < 2) {
        fail("expected: hub <id> key=value...");
      }
      HubConfig hub;
      hub.id = tok[1];
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto kv = split_key_value(tok[i]);
        if (!kv) {
          fail("expected key=value, got '" + tok[i] + "'");
        }
        if (kv->key == "host") {
          hub.host = kv->value;
        } else if (kv->key == "domain") {
          if (kv->value == "modern") {
            hub.domain = DomainId::modern();
          } else if (kv->value == "legacy") {
            hub.domain = DomainId::legacy(hub.id);
          } else if (!kv->value.empty()) {
            hub.domain = DomainId{kv->value};
          } else {
            fail("empty domain");
          }
        } else if (kv->key == "bridged") {
          if (kv->value != "true" && kv->value != "false") {
            fail("bridged expects true or false");
          }
          hub.bridged = kv->value == "true";
        } else if (kv->key == "gateway") {
          if (kv->value == "direct") {
            hub.gateway = GatewayKind::Direct;
          } else if (kv->value == "distributor-collector") {
            hub.gateway = GatewayKind::DistributorCollector;
          } else {
            fail("unknown gateway '" + kv->value + "'");
          }
        } else {
          fail("unknown hub key '" + kv->key + "'");
        }
      }
      hubs.push_back(std::move(hub));
    } else if (tok[0] == "node") {
      if (hubs.empty()) {
        fail("node outside a hub");
      }
      if (tok.size() < 3) {
        fail("expected: node <name> <role> [key=value...]");
      }
      NodeDescriptor node;
      node.name = tok[1];
      node.hub = hubs.back().id;
      try {
        node.role = parse_role(tok[2]);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      for (std::size_t i = 3; i < tok.size(); ++i) {
        auto kv = split_key_value(tok[i]);
        if (!kv) {
          fail("expected key=value, got '" + tok[i] + "'");
        }
        if (kv->key == "period") {
          auto p = detail::parse_double(kv->value);
          if (!p || !(*p > 0.0)) {
            fail("period must be a positive number");
          }
          node.period = *p;
        } else {
          node.params[kv->key] = kv->value;
        }
      }
      hubs.back().nodes.push_back(std::move(node));
    } else {
      fail("unknown keyword '" + tok[0] + "'");
    }
  }
  return hubs;
}

std::map<std::string, RobotBody> parse_poses(std::string_view text, const std::string& filename,
                                             const std::vector<std::string>& declared) {
  std::map<std::string, RobotBody> robots;
  for (const auto& name : declared) {
    robots[name];
  }
  std::string current;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) { throw ParseError(filename, line_no, what); };
  const auto joints = [&](const std::vector<std::string>& tok, std::size_t from) {
    if (tok.size() != from + 6) {
      fail("expected 6 joint values");
    }
    JointVector q{};
    for (std::size_t i = 0; i < 6; ++i) {
      auto v = detail::parse_double(tok[from + i]);
      if (!v || !std::isfinite(*v)) {
        fail("bad joint value '" + tok[from + i] + "'");
      }
      q[i] = *v;
    }
    return q;
  };
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto tok = detail::tokenize(detail::strip_comment(raw));
    if (tok.empty()) {
      continue;
    }
    if (tok[0] == "robot") {
      if (tok.size() != 2) {
        fail("expected: robot <name>");
      }
      if (robots.count(tok[1]) == 0) {
        throw UnresolvedReference(tok[1]);
      }
      current = tok[1];
    } else if (tok[0] == "start" || tok[0] == "pose") {
      if (current.empty()) {
        fail("'" + tok[0] + "' before any robot line");
      }
      if (tok[0] == "start") {
        robots[current].q = joints(tok, 1);
      } else {
        if (tok.size() < 2) {
          fail("expected: pose <NAME> <6 joints>");
        }
        robots[current].poses.set(tok[1], joints(tok, 2));
      }
    } else {
      fail("unknown keyword '" + tok[0] + "'");
    }
  }
  return robots;
}

Scenario load_scenario(const std::filesystem::path& dir) {
  Scenario sc;
  sc.dir = dir;
  const auto main_path = dir / "scenario.txt";
  const std::string main_file = main_path.string();
  const std::string text = read_file(main_path);

  std::map<std::string, std::pair<std::string, std::size_t>> files;  // key -> (name, line)
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) { throw ParseError(main_file, line_no, what); };
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto tok = detail::tokenize(detail::strip_comment(raw));
    if (tok.empty()) {
      continue;
    }
    const auto& key = tok[0];
    const auto one = [&]() -> const std::string& {
      if (tok.size() != 2) {
        fail("expected: " + key + " <value>");
      }
      return tok[1];
    };
    if (key == "name") {
      sc.name = one();
    } else if (key == "schemas" || key == "poses" || key == "hubs" || key == "model" || key == "operator") {
      files[key] = {one(), line_no};
    } else if (key == "topology") {
      auto mode = parse_topology(one());
      if (!mode) {
        fail("unknown topology '" + tok[1] + "'");
      }
      sc.topology = *mode;
    } else if (key == "seed") {
      auto v = parse_u64(one());
      if (!v) {
        fail("bad seed");
      }
      sc.seed = *v;
    } else if (key == "max_ticks") {
      auto v = parse_u64(one());
      if (!v || *v == 0) {
        fail("max_ticks must be a positive integer");
      }
      sc.max_ticks = *v;
    } else if (key == "tick") {
      auto v = detail::parse_double(one());
      if (!v || !(*v > 0.0)) {
        fail("tick must be positive");
      }
      sc.tick_len = *v;
    } else if (key == "mir_station") {
      if (tok.size() != 4) {
        fail("expected: mir_station <name> <x> <y>");
      }
      auto x = detail::parse_double(tok[2]);
      auto y = detail::parse_double(tok[3]);
      if (!x || !y) {
        fail("bad station coordinates");
      }
      sc.mir.stations[tok[1]] = MirService::Point{*x, *y};
    } else if (key == "mir_start") {
      sc.mir.start = one();
    } else if (key == "mir_speed") {
      auto v = detail::parse_double(one());
      if (!v || !(*v > 0.0)) {
        fail("mir_speed must be positive");
      }
      sc.mir.speed = *v;
    } else if (key == "effector") {
      sc.effectors.push_back(one());
    } else if (key == "fault") {
      try {
        sc.faults.push_back(parse_fault(one()));
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  line_no = 0;
  for (const char* required : {"hubs", "poses", "model"}) {
    if (files.count(required) == 0) {
      fail(std::string("missing '") + required + "' entry");
    }
  }
  if (sc.name.empty()) {
    sc.name = dir.filename().string();
  }

  const auto load = [&](const std::string& key) {
    const auto path = dir / files.at(key).first;
    line_no = files.at(key).second;
    if (!std::filesystem::exists(path)) {
      fail("file not found: " + files.at(key).first);
    }
    return std::make_pair(read_file(path), path.string());
  };

  if (files.count("schemas")) {
    auto [body, name] = load("schemas");
    sc.extra_schemas = parse_schema_text(body, name);
  }
  const SchemaRegistry registry = sc.registry();

  {
    auto [body, name] = load("hubs");
    sc.hubs = parse_hubs(body, name);
  }
  std::map<std::string, const NodeDescriptor*> nodes;
  std::vector<std::string> movers;
  for (const auto& hub : sc.hubs) {
    for (const auto& n : hub.nodes) {
      nodes[n.name] = &n;
      if (n.role == Role::Mover) {
        auto it = n.params.find("robot");
        movers.push_back(it == n.params.end() ? n.name : it->second);
      }
    }
  }
  {
    auto [body, name] = load("poses");
    sc.robots = parse_poses(body, name, movers);
  }

  const std::set<std::string> effectors(sc.effectors.begin(), sc.effectors.end());
  for (const auto& [name, n] : nodes) {
    const auto param = [&](const std::string& key) -> std::optional<std::string> {
      auto it = n->params.find(key);
      return it == n->params.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    if (n->role == Role::PoseSaver) {
      auto robot = param("robot");
      if (!robot || sc.robots.count(*robot) == 0) {
        throw UnresolvedReference(robot.value_or(name + ".robot"));
      }
    }
    if (n->role == Role::Dock) {
      for (const auto& ee : split_commas(param("holds").value_or(""))) {
        if (effectors.count(ee) == 0) {
          throw UnresolvedReference(ee);
        }
      }
    }
    if (n->role == Role::SmartTool) {
      for (const char* key : {"bolt_tool", "filter_tool"}) {
        if (auto ee = param(key); ee && effectors.count(*ee) == 0) {
          throw UnresolvedReference(*ee);
        }
      }
    }
    if ((n->role == Role::Translator || n->role == Role::MirSuite) && sc.mir.stations.empty()) {
      throw ConfigError("node '" + name + "' needs mir_station entries");
    }
  }
  if (!sc.mir.stations.empty() && sc.mir.stations.count(sc.mir.start) == 0) {
    throw UnresolvedReference(sc.mir.start.empty() ? std::string("mir_start") : sc.mir.start);
  }

  {
    auto [body, name] = load("model");
    sc.model = parse_model(body, name, registry);
  }
  const TopologyPlan plan = build_topology(sc.hubs, sc.topology);
  for (const auto& a : sc.model.abilities) {
    if (!a.command) {
      continue;
    }
    auto it = nodes.find(a.command->node);
    if (it == nodes.end() || plan.controller_commands.count(a.command->node) == 0) {
      throw UnresolvedReference(a.command->node);
    }
    if (role_interface(it->second->role).command != a.command->schema) {
      throw ConfigError("ability '" + a.name + "' sends " + a.command->schema.name + " to node '" +
                        a.command->node + "'");
    }
  }
  for (const auto& p : sc.model.pipelines) {
    if (p.source.node.empty()) {
      continue;
    }
    auto it = nodes.find(p.source.node);
    if (it == nodes.end() || plan.controller_states.count(p.source.node) == 0) {
      throw UnresolvedReference(p.source.node);
    }
    if (role_interface(it->second->role).state != p.source.schema) {
      throw ConfigError("pipeline '" + p.target + "' reads " + p.source.schema.name + " from node '" +
                        p.source.node + "'");
    }
  }

  if (files.count("operator")) {
    auto [body, name] = load("operator");
    sc.operator_script = parse_operator_script(body, name);
  }
  return sc;
}

}  // namespace cellbus
