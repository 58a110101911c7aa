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

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cellbus/errors.hpp"
#include "cellbus/runner.hpp"
#include "text_util.hpp"

namespace cellbus {

namespace {

struct WorldRow {
  std::uint64_t tick = 0;
  std::map<std::string, std::string> fields;
};

std::uint64_t number(const std::string& s, const std::string& line) {
  auto v = detail::parse_int(s);
  if (!v || *v < 0) throw TraceCorrupt("bad number in line '" + line + "'");
  return static_cast<std::uint64_t>(*v);
}

class Assertion {
 public:
  Assertion(std::string id, std::string description) : result_{std::move(id), std::move(description), true, {}} {}

  void check(bool ok, std::uint64_t tick) {
    if (!ok && result_.passed) {
      result_.passed = false;
      result_.first_violation = tick;
    }
  }
  AssertionResult result() const { return result_; }

 private:
  AssertionResult result_;
};

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Completed: return "Completed";
    case Outcome::Stuck: return "Stuck";
    case Outcome::SafetyViolation: return "SafetyViolation";
  }
  return "?";
}

bool RunReport::assertions_pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const AssertionResult& a) { return a.passed; });
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["outcome"] = std::string(to_string(outcome));
  j["reason"] = reason;
  j["success"] = success();
  j["ticks_used"] = ticks_used;
  j["topology"] = topology;
  j["seed"] = seed;
  j["topic_count"] = topic_count;
  j["topic_messages"] = nlohmann::ordered_json::object();
  for (const auto& [topic, count] : topic_messages) j["topic_messages"][topic] = count;
  j["assertions"] = nlohmann::ordered_json::array();
  for (const auto& a : assertions) {
    nlohmann::ordered_json item{{"id", a.id}, {"description", a.description}, {"passed", a.passed}};
    item["first_violation"] = a.first_violation ? nlohmann::ordered_json(*a.first_violation) : nullptr;
    j["assertions"].push_back(item);
  }
  j["boundaries"] = boundaries;
  j["trace_path"] = trace_path;
  return j.dump(2) + "\n";
}

RunReport derive_report(std::string_view trace) {
  const auto mark = trace.rfind("checksum ");
  if (mark == std::string_view::npos || (mark != 0 && trace[mark - 1] != '\n')) {
    throw TraceCorrupt("missing checksum");
  }
  char expected[17];
  std::snprintf(expected, sizeof expected, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(trace.substr(0, mark))));
  if (trace.substr(mark) != "checksum " + std::string(expected) + "\n") {
    throw TraceCorrupt("checksum mismatch");
  }

  RunReport r;
  std::vector<WorldRow> world;
  std::vector<std::pair<std::uint64_t, std::string>> collaborative;  // (tick, ability)
  std::string section;
  bool header = false;
  bool have_outcome = false;
  for (const auto& line : detail::split_lines(trace.substr(0, mark))) {
    if (!header) {
      if (line != "cellbus-trace 1") throw TraceCorrupt("unknown trace header");
      header = true;
      continue;
    }
    if (!line.empty() && line.front() == '[') {
      section = line;
      continue;
    }
    const auto tok = detail::tokenize(line);
    if (tok.empty()) throw TraceCorrupt("empty line");
    if (section == "[meta]") {
      if (tok[0] == "topology" && tok.size() == 2) r.topology = tok[1];
      else if (tok[0] == "seed" && tok.size() == 2) r.seed = number(tok[1], line);
      else if (tok[0] == "topics" && tok.size() == 2) r.topic_count = number(tok[1], line);
    } else if (section == "[bus]") {
      if (tok.size() != 7 || tok[0] != "b") throw TraceCorrupt("bad bus line '" + line + "'");
      ++r.topic_messages[tok[2] + " " + tok[3]];
    } else if (section == "[world]") {
      if (tok.size() < 2) throw TraceCorrupt("bad world line '" + line + "'");
      if (tok[0] == "o") continue;
      if (tok[0] != "w") throw TraceCorrupt("bad world line '" + line + "'");
      WorldRow row;
      row.tick = number(tok[1], line);
      for (std::size_t i = 2; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) throw TraceCorrupt("bad world field '" + tok[i] + "'");
        row.fields[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
      }
      world.push_back(std::move(row));
    } else if (section == "[controller]") {
      if (tok.size() < 3) throw TraceCorrupt("bad controller line '" + line + "'");
      if (tok[0] == "start" || tok[0] == "done") {
        r.boundaries.push_back(line);
      } else if (tok[0] == "emit") {
        if (tok.size() == 6 && tok[5] == "collaborative") collaborative.emplace_back(number(tok[1], line), tok[3]);
      } else if (tok[0] != "plan" && tok[0] != "violation") {
        throw TraceCorrupt("bad controller line '" + line + "'");
      }
    } else if (section == "[outcome]") {
      if (tok[0] == "outcome" && tok.size() == 2) {
        if (tok[1] == "Completed") r.outcome = Outcome::Completed;
        else if (tok[1] == "Stuck") r.outcome = Outcome::Stuck;
        else if (tok[1] == "SafetyViolation") r.outcome = Outcome::SafetyViolation;
        else throw TraceCorrupt("unknown outcome '" + tok[1] + "'");
        have_outcome = true;
      } else if (tok[0] == "reason") {
        r.reason = line.substr(7);
      } else if (tok[0] == "ticks" && tok.size() == 2) {
        r.ticks_used = number(tok[1], line);
      } else {
        throw TraceCorrupt("bad outcome line '" + line + "'");
      }
    } else {
      throw TraceCorrupt("line outside a known section: '" + line + "'");
    }
  }
  if (!have_outcome) throw TraceCorrupt("missing outcome");

  const auto field = [](const WorldRow& row, const std::string& key) -> const std::string& {
    static const std::string empty;
    auto it = row.fields.find(key);
    return it == row.fields.end() ? empty : it->second;
  };
  const auto fact = [&](const WorldRow& row, std::size_t i, char c) {
    const auto& f = field(row, "facts");
    return f.size() > i && f[i] == c;
  };

  Assertion a("a", "collaborative abilities start only with a verified operator");
  Assertion b("b", "ladder frame placed before bolt tightening");
  Assertion c("c", "bolt tightening only after the bolts are placed");
  Assertion d("d", "oil filter tightening only after the filters are placed");
  Assertion e("e", "at most one end-effector attached");
  Assertion f("f", "robot joints frozen during a safeguard stop");

  for (const auto& [tick, ability] : collaborative) {
    const WorldRow* at = nullptr;
    for (const auto& row : world) {
      if (row.tick <= tick) at = &row;
    }
    a.check(at != nullptr && field(*at, "verified") == "1", tick);
  }
  for (std::size_t i = 0; i < world.size(); ++i) {
    const auto& row = world[i];
    const auto& activity = field(row, "activity");
    if (activity == "tighten:bolts") {
      b.check(fact(row, 0, 'L'), row.tick);
      c.check(fact(row, 1, 'B'), row.tick);
    }
    if (activity == "tighten:filters") d.check(fact(row, 2, 'F'), row.tick);
    e.check(field(row, "flange").find(',') == std::string::npos, row.tick);
    if (i > 0 && field(row, "safeguard") == "1") {
      for (const auto& [key, value] : row.fields) {
        if (key.rfind("q:", 0) == 0) f.check(field(world[i - 1], key) == value, row.tick);
      }
    }
  }
  r.assertions = {a.result(), b.result(), c.result(), d.result(), e.result(), f.result()};
  return r;
}

RunReport replay(const std::filesystem::path& trace_path) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw TraceCorrupt("cannot read " + trace_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunReport r = derive_report(ss.str());
  r.trace_path = trace_path.string();
  return r;
}

std::vector<std::string> compare_boundaries(const RunReport& a, const RunReport& b) {
  std::vector<std::string> out;
  const std::size_t n = std::max(a.boundaries.size(), b.boundaries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string* x = i < a.boundaries.size() ? &a.boundaries[i] : nullptr;
    const std::string* y = i < b.boundaries.size() ? &b.boundaries[i] : nullptr;
    if (x && y && *x == *y) continue;
    if (x) out.push_back("- " + *x);
    if (y) out.push_back("+ " + *y);
  }
  return out;
}

}  // namespace cellbus
