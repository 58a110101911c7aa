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

#include "cellbus/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

std::string Variable::format(int v) const {
  switch (kind) {
    case VarKind::Bool: return v != 0 ? "true" : "false";
    case VarKind::Int: return std::to_string(v);
    case VarKind::Enum:
      return v >= 0 && static_cast<std::size_t>(v) < labels.size() ? labels[static_cast<std::size_t>(v)] : "?";
  }
  return "?";
}

std::optional<int> Variable::parse(std::string_view literal) const {
  switch (kind) {
    case VarKind::Bool:
      if (literal == "true") return 1;
      if (literal == "false") return 0;
      return std::nullopt;
    case VarKind::Int:
      if (auto v = detail::parse_int(literal)) {
        return static_cast<int>(*v);
      }
      return std::nullopt;
    case VarKind::Enum:
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == literal) {
          return static_cast<int>(i);
        }
      }
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Predicate

struct Predicate::Node {
  enum class Kind { Const, Compare, Echoed, Not, And, Or };
  Kind kind = Kind::Const;
  bool value = true;
  std::size_t var = 0;
  Op op = Op::Eq;
  int literal = 0;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

bool eval_node(const Predicate::Node& n, const ControlState& s, bool echoed);

}  // namespace

Predicate::Predicate() : node_(std::make_shared<const Node>()) {}

Predicate Predicate::constant(bool value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  return Predicate(std::move(n));
}

Predicate Predicate::compare(std::size_t var, Op op, int value) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Compare;
  n->var = var;
  n->op = op;
  n->literal = value;
  return Predicate(std::move(n));
}

Predicate Predicate::echoed() {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Echoed;
  return Predicate(std::move(n));
}

Predicate Predicate::negate(Predicate p) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Not;
  n->children.push_back(std::move(p.node_));
  return Predicate(std::move(n));
}

Predicate Predicate::all_of(std::vector<Predicate> parts) {
  if (parts.size() == 1) {
    return parts.front();
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::And;
  for (auto& p : parts) {
    n->children.push_back(std::move(p.node_));
  }
  return Predicate(std::move(n));
}

Predicate Predicate::any_of(std::vector<Predicate> parts) {
  if (parts.size() == 1) {
    return parts.front();
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Or;
  n->value = false;
  for (auto& p : parts) {
    n->children.push_back(std::move(p.node_));
  }
  return Predicate(std::move(n));
}

namespace {

bool eval_node(const Predicate::Node& n, const ControlState& s, bool echoed) {
  using K = Predicate::Node::Kind;
  switch (n.kind) {
    case K::Const: return n.value;
    case K::Echoed: return echoed;
    case K::Compare: {
      const int v = s[n.var];
      switch (n.op) {
        case Predicate::Op::Eq: return v == n.literal;
        case Predicate::Op::Ne: return v != n.literal;
        case Predicate::Op::Lt: return v < n.literal;
        case Predicate::Op::Le: return v <= n.literal;
        case Predicate::Op::Gt: return v > n.literal;
        case Predicate::Op::Ge: return v >= n.literal;
      }
      return false;
    }
    case K::Not: return !eval_node(*n.children.front(), s, echoed);
    case K::And:
      for (const auto& c : n.children) {
        if (!eval_node(*c, s, echoed)) return false;
      }
      return true;
    case K::Or:
      for (const auto& c : n.children) {
        if (eval_node(*c, s, echoed)) return true;
      }
      return false;
  }
  return false;
}

void collect(const Predicate::Node& n, bool& echo, std::set<std::size_t>& vars) {
  if (n.kind == Predicate::Node::Kind::Echoed) echo = true;
  if (n.kind == Predicate::Node::Kind::Compare) vars.insert(n.var);
  for (const auto& c : n.children) collect(*c, echo, vars);
}

}  // namespace

bool Predicate::eval(const ControlState& state, bool echoed) const { return eval_node(*node_, state, echoed); }

bool Predicate::uses_echo() const {
  bool echo = false;
  std::set<std::size_t> vars;
  collect(*node_, echo, vars);
  return echo;
}

std::vector<std::size_t> Predicate::variables() const {
  bool echo = false;
  std::set<std::size_t> vars;
  collect(*node_, echo, vars);
  return {vars.begin(), vars.end()};
}

// ---------------------------------------------------------------------------
// Predicate parser

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.' || c == '-' || c == ':';
}

std::vector<std::string> lex_predicate(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      out.emplace_back(1, c);
      ++i;
      continue;
    }
    if (i + 1 < text.size()) {
      const std::string two(text.substr(i, 2));
      if (two == "&&" || two == "||" || two == "==" || two == "!=" || two == "<=" || two == ">=") {
        out.push_back(two);
        i += 2;
        continue;
      }
    }
    if (c == '!' || c == '<' || c == '>') {
      out.emplace_back(1, c);
      ++i;
      continue;
    }
    if (!is_ident_char(c)) {
      throw ModelError("unexpected character '" + std::string(1, c) + "' in predicate '" + std::string(text) + "'");
    }
    std::size_t j = i;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

class PredicateParser {
 public:
  PredicateParser(std::string_view text, const std::vector<Variable>& vars)
      : text_(text), tokens_(lex_predicate(text)), vars_(vars) {}

  Predicate parse() {
    if (tokens_.empty()) {
      fail("empty predicate");
    }
    auto p = parse_or();
    if (pos_ != tokens_.size()) {
      fail("unexpected '" + tokens_[pos_] + "'");
    }
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError(what + " in predicate '" + std::string(text_) + "'");
  }

  bool accept(std::string_view tok) {
    if (pos_ < tokens_.size() && tokens_[pos_] == tok) {
      ++pos_;
      return true;
    }
    return false;
  }

  const std::string& next() {
    if (pos_ >= tokens_.size()) {
      fail("unexpected end");
    }
    return tokens_[pos_++];
  }

  Predicate parse_or() {
    std::vector<Predicate> parts{parse_and()};
    while (accept("||")) parts.push_back(parse_and());
    return Predicate::any_of(std::move(parts));
  }

  Predicate parse_and() {
    std::vector<Predicate> parts{parse_unary()};
    while (accept("&&")) parts.push_back(parse_unary());
    return Predicate::all_of(std::move(parts));
  }

  Predicate parse_unary() {
    if (accept("!")) return Predicate::negate(parse_unary());
    if (accept("(")) {
      auto p = parse_or();
      if (!accept(")")) fail("missing ')'");
      return p;
    }
    const std::string tok = next();
    if (tok == "true") return Predicate::constant(true);
    if (tok == "false") return Predicate::constant(false);
    if (tok == "echoed") return Predicate::echoed();
    std::size_t index = vars_.size();
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i].name == tok) index = i;
    }
    if (index == vars_.size()) fail("unknown variable '" + tok + "'");
    const Variable& var = vars_[index];

    static const std::pair<std::string_view, Predicate::Op> kOps[] = {
        {"==", Predicate::Op::Eq}, {"!=", Predicate::Op::Ne}, {"<", Predicate::Op::Lt},
        {"<=", Predicate::Op::Le}, {">", Predicate::Op::Gt},  {">=", Predicate::Op::Ge}};
    for (const auto& [text, op] : kOps) {
      if (!accept(text)) continue;
      const std::string lit = next();
      auto value = var.parse(lit);
      if (!value) fail("'" + lit + "' is not a value of '" + var.name + "'");
      if (var.kind == VarKind::Enum && op != Predicate::Op::Eq && op != Predicate::Op::Ne) {
        fail("ordering comparison on enum '" + var.name + "'");
      }
      return Predicate::compare(index, op, *value);
    }
    if (var.kind != VarKind::Bool) fail("'" + var.name + "' needs a comparison");
    return Predicate::compare(index, Predicate::Op::Eq, 1);
  }

  std::string_view text_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
  const std::vector<Variable>& vars_;
};

}  // namespace

Predicate parse_predicate(std::string_view text, const std::vector<Variable>& variables) {
  return PredicateParser(text, variables).parse();
}

// ---------------------------------------------------------------------------
// Model

std::string PipelineSource::key() const {
  if (!node.empty()) return node;
  return domain.name + ":" + (topic ? topic->str() : std::string());
}

std::optional<std::size_t> Model::find_variable(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return i;
  }
  return std::nullopt;
}

const Variable& Model::variable(std::string_view name) const {
  auto i = find_variable(name);
  if (!i) throw ModelError("unknown variable '" + std::string(name) + "'");
  return variables[*i];
}

const Ability* Model::find_ability(std::string_view name) const {
  for (const auto& a : abilities) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

ControlState Model::initial_state() const {
  ControlState s;
  s.reserve(variables.size());
  for (const auto& v : variables) s.push_back(v.initial);
  return s;
}

std::string Model::format(const ControlState& state) const {
  std::string out;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (i != 0) out += ' ';
    out += variables[i].name + "=" + variables[i].format(state[i]);
  }
  return out;
}

std::optional<std::size_t> Model::violated_spec(const ControlState& state) const {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].forbidden.eval(state)) return i;
  }
  return std::nullopt;
}

std::optional<ControlState> Model::apply(const Ability& ability, const ControlState& state) const {
  ControlState next = state;
  for (const auto& e : ability.effects) {
    int& v = next[e.var];
    switch (e.op) {
      case Effect::Op::Set: v = e.value; break;
      case Effect::Op::Add: v += e.value; break;
      case Effect::Op::Sub: v -= e.value; break;
    }
    if (!variables[e.var].in_domain(v)) return std::nullopt;
  }
  return next;
}

Predicate Model::effects_hold(const Ability& ability) const {
  // Relative effects are not checked.
  std::vector<Predicate> parts;
  for (const auto& e : ability.effects) {
    if (e.op == Effect::Op::Set) parts.push_back(Predicate::compare(e.var, Predicate::Op::Eq, e.value));
  }
  if (parts.empty()) return Predicate::constant(true);
  return Predicate::all_of(std::move(parts));
}

// ---------------------------------------------------------------------------
// Model text

namespace {

enum class Shape { Bool, Number, Text };

std::string rest_after(const std::string& line, std::size_t tokens_to_skip) {
  std::size_t i = 0;
  for (std::size_t t = 0; t < tokens_to_skip; ++t) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
  }
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::string out = line.substr(i);
  while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
  return out;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
  });
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto end = s.find(sep, start);
    out.emplace_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

class ModelParser {
 public:
  ModelParser(std::string_view text, std::string filename, const SchemaRegistry& registry)
      : lines_(detail::split_lines(text)), file_(std::move(filename)), registry_(registry) {}

  Model parse() {
    for (line_no_ = 1; line_no_ <= lines_.size(); ++line_no_) {
      const std::string line(detail::strip_comment(lines_[line_no_ - 1]));
      const auto tok = detail::tokenize(line);
      if (tok.empty()) continue;
      try {
        if (block_ == Block::Ability) {
          ability_line(line, tok);
        } else if (block_ == Block::Operation) {
          operation_line(line, tok);
        } else {
          top_line(line, tok);
        }
      } catch (const ModelError& e) {
        fail(e.what());
      }
    }
    if (block_ != Block::None) {
      line_no_ = block_line_;
      fail("block is missing 'end'");
    }
    return std::move(model_);
  }

 private:
  enum class Block { None, Ability, Operation };

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, line_no_, what); }

  void unique(std::set<std::string>& seen, const std::string& name, const char* what) {
    if (!valid_name(name)) fail(std::string("invalid ") + what + " name '" + name + "'");
    if (!seen.insert(name).second) fail(std::string("duplicate ") + what + " '" + name + "'");
  }

  void top_line(const std::string& line, const std::vector<std::string>& tok) {
    const auto& kw = tok[0];
    if (kw == "var") {
      variable(tok);
    } else if (kw == "pipeline") {
      pipeline(tok);
    } else if (kw == "ability") {
      if (tok.size() != 2) fail("expected: ability <name>");
      unique(ability_names_, tok[1], "ability");
      block_ = Block::Ability;
      block_line_ = line_no_;
      ability_ = Ability{};
      ability_.name = tok[1];
      has_completion_ = false;
    } else if (kw == "spec") {
      if (tok.size() < 3) fail("expected: spec <name> <predicate>");
      unique(spec_names_, tok[1], "spec");
      model_.specs.push_back(Specification{tok[1], parse_predicate(rest_after(line, 2), model_.variables)});
    } else if (kw == "operation") {
      if (tok.size() != 2) fail("expected: operation <name>");
      unique(operation_names_, tok[1], "operation");
      block_ = Block::Operation;
      block_line_ = line_no_;
      operation_ = OperationSpec{tok[1], Predicate::constant(true), Predicate::constant(false)};
      has_goal_ = false;
    } else {
      fail("unknown keyword '" + kw + "'");
    }
  }

  void variable(const std::vector<std::string>& tok) {
    if (tok.size() < 3) fail("expected: var <name> <bool|int|enum> ...");
    if (tok[1] == "true" || tok[1] == "false" || tok[1] == "echoed") fail("reserved variable name '" + tok[1] + "'");
    unique(var_names_, tok[1], "variable");
    Variable v;
    v.name = tok[1];
    std::size_t i = 3;
    if (tok[2] == "bool") {
      v.kind = VarKind::Bool;
    } else if (tok[2] == "int") {
      if (tok.size() < 5) fail("expected: var <name> int <lo> <hi>");
      auto lo = detail::parse_int(tok[3]);
      auto hi = detail::parse_int(tok[4]);
      if (!lo || !hi || *lo > *hi) fail("invalid int range");
      v.kind = VarKind::Int;
      v.lo = static_cast<int>(*lo);
      v.hi = static_cast<int>(*hi);
      i = 5;
    } else if (tok[2] == "enum") {
      if (tok.size() < 4) fail("expected: var <name> enum <a,b,...>");
      v.kind = VarKind::Enum;
      v.labels = split_on(tok[3], ',');
      std::set<std::string> seen;
      for (const auto& l : v.labels) {
        if (l.empty() || !seen.insert(l).second) fail("invalid or duplicate label in '" + tok[3] + "'");
      }
      v.hi = static_cast<int>(v.labels.size()) - 1;
      i = 4;
    } else {
      fail("unknown variable kind '" + tok[2] + "'");
    }
    v.initial = v.lo;
    if (i < tok.size()) {
      if (tok[i] != "=" || i + 2 != tok.size()) fail("expected: = <initial>");
      auto init = v.parse(tok[i + 1]);
      if (!init || !v.in_domain(*init)) fail("invalid initial value '" + tok[i + 1] + "'");
      v.initial = *init;
    }
    model_.variables.push_back(std::move(v));
  }

  const FieldSpec& resolve_field(const SchemaId& schema, const std::string& path) {
    if (!registry_.contains(schema)) fail("unknown schema '" + schema.name + "'");
    const MessageSchema* current = &registry_.get(schema);
    const auto parts = split_on(path, '.');
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const FieldSpec* f = current->field(parts[i]);
      if (f == nullptr) fail("schema '" + schema.name + "' has no field '" + path + "'");
      if (i + 1 == parts.size()) return *f;
      if (f->type.kind != FieldKind::Nested) fail("'" + parts[i] + "' is not a nested field");
      current = &registry_.get(f->type.nested);
    }
    fail("empty field path");
  }

  void pipeline(const std::vector<std::string>& tok) {
    if (tok.size() < 4) fail("expected: pipeline <var> from|topic ...");
    Pipeline p;
    p.target = tok[1];
    auto target = model_.find_variable(p.target);
    if (!target) fail("pipeline target '" + p.target + "' is not declared");
    std::size_t i = 2;
    if (tok[i] == "from") {
      if (tok.size() < i + 3) fail("expected: from <node> <schema>");
      p.source.node = tok[i + 1];
      p.source.schema = SchemaId{tok[i + 2]};
      i += 3;
    } else if (tok[i] == "topic") {
      if (tok.size() < i + 4) fail("expected: topic <domain> <topic> <schema>");
      p.source.domain = DomainId{tok[i + 1]};
      if (!TopicName::is_valid(tok[i + 2])) fail("invalid topic '" + tok[i + 2] + "'");
      p.source.topic = TopicName::parse(tok[i + 2]);
      p.source.schema = SchemaId{tok[i + 3]};
      i += 4;
    } else {
      fail("expected 'from' or 'topic'");
    }
    if (i + 1 >= tok.size() || tok[i] != "field") fail("pipeline must start with: field <path>");
    const FieldSpec& f = resolve_field(p.source.schema, tok[i + 1]);
    Shape shape{};
    switch (f.type.kind) {
      case FieldKind::Bool: shape = Shape::Bool; break;
      case FieldKind::F32: shape = Shape::Number; break;
      case FieldKind::Str: shape = Shape::Text; break;
      default: fail("field '" + tok[i + 1] + "' is not a scalar");
    }
    Stage extract;
    extract.path = tok[i + 1];
    p.stages.push_back(extract);
    i += 2;

    while (i < tok.size()) {
      if (tok[i] == "aggregate") {
        if (i + 2 >= tok.size()) fail("expected: aggregate <any|all|latest|count> <k>");
        Stage s;
        s.kind = Stage::Kind::Aggregate;
        const auto& fn = tok[i + 1];
        if (fn == "any") s.fn = Stage::Fn::Any;
        else if (fn == "all") s.fn = Stage::Fn::All;
        else if (fn == "latest") s.fn = Stage::Fn::Latest;
        else if (fn == "count") s.fn = Stage::Fn::Count;
        else fail("unknown aggregate '" + fn + "'");
        auto k = detail::parse_int(tok[i + 2]);
        if (!k || *k < 1) fail("aggregate window must be >= 1");
        s.window = static_cast<std::size_t>(*k);
        if (s.fn != Stage::Fn::Latest && shape != Shape::Bool) fail("aggregate '" + fn + "' needs a bool input");
        if (s.fn == Stage::Fn::Count) shape = Shape::Number;
        p.stages.push_back(s);
        i += 3;
      } else if (tok[i] == "discretize") {
        if (shape != Shape::Number) fail("discretize needs a numeric input");
        Stage s;
        s.kind = Stage::Kind::Discretize;
        ++i;
        bool closed = false;
        for (; i < tok.size(); ++i) {
          if (tok[i].rfind("else:", 0) == 0) {
            s.otherwise = tok[i].substr(5);
            closed = true;
            ++i;
            break;
          }
          const auto colon = tok[i].find(':');
          if (tok[i].rfind("<=", 0) != 0 || colon == std::string::npos) fail("expected <=bound:label");
          auto bound = detail::parse_double(tok[i].substr(2, colon - 2));
          if (!bound) fail("invalid bound in '" + tok[i] + "'");
          if (!s.thresholds.empty() && *bound <= s.thresholds.back().first) fail("bounds must increase");
          s.thresholds.emplace_back(*bound, tok[i].substr(colon + 1));
        }
        if (!closed || s.otherwise.empty()) fail("discretize needs a final else:<label>");
        shape = Shape::Text;
        p.stages.push_back(s);
      } else {
        fail("unknown stage '" + tok[i] + "'");
      }
    }

    const Variable& v = model_.variables[*target];
    const bool ok = (v.kind == VarKind::Bool && shape == Shape::Bool) ||
                    (v.kind == VarKind::Int && shape == Shape::Number) ||
                    (v.kind == VarKind::Enum && shape == Shape::Text);
    if (!ok) fail("pipeline output does not match variable '" + v.name + "'");
    if (v.kind == VarKind::Enum) {
      for (const auto& st : p.stages) {
        if (st.kind != Stage::Kind::Discretize) continue;
        for (const auto& [bound, label] : st.thresholds) {
          if (!v.parse(label)) fail("label '" + label + "' is not a value of '" + v.name + "'");
        }
        if (!v.parse(st.otherwise)) fail("label '" + st.otherwise + "' is not a value of '" + v.name + "'");
      }
    }
    model_.pipelines.push_back(std::move(p));
  }

  void ability_line(const std::string& line, const std::vector<std::string>& tok) {
    const auto& kw = tok[0];
    if (kw == "guard") {
      ability_.guard = parse_predicate(rest_after(line, 1), model_.variables);
      if (ability_.guard.uses_echo()) fail("'echoed' is only allowed in completion predicates");
    } else if (kw == "completion") {
      completion_text_ = rest_after(line, 1);
      has_completion_ = true;
    } else if (kw == "effect") {
      if (tok.size() != 4) fail("expected: effect <var> <=|+=|-=> <value>");
      auto var = model_.find_variable(tok[1]);
      if (!var) fail("unknown variable '" + tok[1] + "'");
      const Variable& v = model_.variables[*var];
      Effect e;
      e.var = *var;
      if (tok[2] == "=") {
        e.op = Effect::Op::Set;
        auto value = v.parse(tok[3]);
        if (!value || !v.in_domain(*value)) fail("'" + tok[3] + "' is not a value of '" + v.name + "'");
        e.value = *value;
      } else if (tok[2] == "+=" || tok[2] == "-=") {
        if (v.kind != VarKind::Int) fail("relative effect on non-int '" + v.name + "'");
        auto value = detail::parse_int(tok[3]);
        if (!value) fail("invalid increment '" + tok[3] + "'");
        e.op = tok[2] == "+=" ? Effect::Op::Add : Effect::Op::Sub;
        e.value = static_cast<int>(*value);
      } else {
        fail("unknown effect operator '" + tok[2] + "'");
      }
      ability_.effects.push_back(e);
    } else if (kw == "command") {
      command(tok);
    } else if (kw == "uncontrollable") {
      ability_.controllable = false;
    } else if (kw == "collaborative") {
      ability_.collaborative = true;
    } else if (kw == "end") {
      if (ability_.controllable && !ability_.command) fail("controllable ability '" + ability_.name + "' has no command");
      if (!ability_.controllable && ability_.command) fail("uncontrollable ability '" + ability_.name + "' has a command");
      if (has_completion_) {
        ability_.completion = parse_predicate(completion_text_, model_.variables);
      } else {
        ability_.completion = Predicate::all_of({Predicate::echoed(), model_.effects_hold(ability_)});
      }
      model_.abilities.push_back(std::move(ability_));
      block_ = Block::None;
    } else {
      fail("unknown ability line '" + kw + "'");
    }
  }

  void command(const std::vector<std::string>& tok) {
    if (tok.size() < 3) fail("expected: command <node> <schema> key=value...");
    CommandTemplate c;
    c.node = tok[1];
    c.schema = SchemaId{tok[2]};
    if (!registry_.contains(c.schema)) fail("unknown schema '" + c.schema.name + "'");
    const auto& schema = registry_.get(c.schema);
    for (std::size_t i = 3; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq == std::string::npos) fail("expected key=value, got '" + tok[i] + "'");
      const std::string key = tok[i].substr(0, eq);
      const std::string raw = tok[i].substr(eq + 1);
      const FieldSpec* f = schema.field(key);
      if (f == nullptr) fail("schema '" + c.schema.name + "' has no field '" + key + "'");
      switch (f->type.kind) {
        case FieldKind::Str: c.message.set(key, Value{raw}); break;
        case FieldKind::Bool:
          if (raw != "true" && raw != "false") fail("'" + key + "' expects true or false");
          c.message.set(key, Value{raw == "true"});
          break;
        case FieldKind::F32: {
          auto v = detail::parse_double(raw);
          if (!v) fail("'" + key + "' expects a number");
          c.message.set(key, Value{static_cast<float>(*v)});
          break;
        }
        case FieldKind::StrList: {
          StrList items;
          if (!raw.empty()) items = split_on(raw, ',');
          c.message.set(key, Value{std::move(items)});
          break;
        }
        case FieldKind::Nested: fail("nested field '" + key + "' cannot be written in a command template");
      }
    }
    if (auto err = registry_.validate(c.schema, c.message)) fail("command template: " + err->describe());
    ability_.command = std::move(c);
  }

  void operation_line(const std::string& line, const std::vector<std::string>& tok) {
    const auto& kw = tok[0];
    if (kw == "pre") {
      operation_.precondition = parse_predicate(rest_after(line, 1), model_.variables);
    } else if (kw == "goal") {
      operation_.goal = parse_predicate(rest_after(line, 1), model_.variables);
      has_goal_ = true;
    } else if (kw == "end") {
      if (!has_goal_) fail("operation '" + operation_.name + "' has no goal");
      if (operation_.goal.uses_echo() || operation_.precondition.uses_echo()) {
        fail("'echoed' is only allowed in completion predicates");
      }
      model_.operations.push_back(std::move(operation_));
      block_ = Block::None;
    } else {
      fail("unknown operation line '" + kw + "'");
    }
  }

  std::vector<std::string> lines_;
  std::string file_;
  const SchemaRegistry& registry_;
  std::size_t line_no_ = 0;
  std::size_t block_line_ = 0;
  Block block_ = Block::None;
  Model model_;
  Ability ability_;
  std::string completion_text_;
  bool has_completion_ = false;
  OperationSpec operation_;
  bool has_goal_ = false;
  std::set<std::string> var_names_, ability_names_, spec_names_, operation_names_;
};

}  // namespace

Model parse_model(std::string_view text, const std::string& filename, const SchemaRegistry& registry) {
  return ModelParser(text, filename, registry).parse();
}

}  // namespace cellbus
