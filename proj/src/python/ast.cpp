/*
 * Copyright 2026 The GFSA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gfsa/python/ast.hpp"

#include <array>
#include <sstream>

#include "gfsa/numeric.hpp"

namespace gfsa::python {

namespace {

constexpr std::array<std::string_view, kNumKinds> kKindNames = {
    "Module", "FunctionDef", "Assign",  "Expr",    "If",   "While",
    "For",    "Pass",        "Break",   "Continue", "Return", "BinOp",
    "Compare", "BoolOp",     "Call",    "Name",    "Constant"};

const std::vector<std::vector<FieldSpec>>& field_table() {
  using F = FieldKind;
  static const std::vector<std::vector<FieldSpec>> table = {
      {{"body", F::kNonemptySeq}},                          // Module
      {{"args", F::kSeq}, {"body", F::kNonemptySeq}},       // FunctionDef
      {{"target", F::kOne}, {"value", F::kOne}},            // Assign
      {{"value", F::kOne}},                                 // Expr
      {{"test", F::kOne}, {"body", F::kNonemptySeq}, {"orelse", F::kSeq}},
      {{"test", F::kOne}, {"body", F::kNonemptySeq}},       // While
      {{"target", F::kOne}, {"iter", F::kOne}, {"body", F::kNonemptySeq}},
      {},                                                   // Pass
      {},                                                   // Break
      {},                                                   // Continue
      {{"value", F::kOpt}},                                 // Return
      {{"left", F::kOne}, {"right", F::kOne}},              // BinOp
      {{"left", F::kOne}, {"right", F::kOne}},              // Compare
      {{"values", F::kNonemptySeq}},                        // BoolOp
      {{"args", F::kSeq}},                                  // Call
      {},                                                   // Name
      {},                                                   // Constant
  };
  return table;
}

bool is_loop(Kind k) { return k == Kind::kWhile || k == Kind::kFor; }

}  // namespace

std::string_view kind_name(Kind k) { return kKindNames[static_cast<int>(k)]; }

Kind kind_from_name(std::string_view name) {
  for (int i = 0; i < kNumKinds; ++i) {
    if (kKindNames[i] == name) return static_cast<Kind>(i);
  }
  throw Error("unknown AST kind '" + std::string(name) + "'");
}

const std::vector<FieldSpec>& fields_of(Kind k) {
  return field_table()[static_cast<int>(k)];
}

int field_index(Kind k, std::string_view field) {
  const auto& fs = fields_of(k);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (fs[i].name == field) return static_cast<int>(i);
  }
  throw Error(std::string(kind_name(k)) + " has no field '" +
              std::string(field) + "'");
}

bool is_statement(Kind k) {
  switch (k) {
    case Kind::kAssign:
    case Kind::kExpr:
    case Kind::kIf:
    case Kind::kWhile:
    case Kind::kFor:
    case Kind::kPass:
    case Kind::kBreak:
    case Kind::kContinue:
    case Kind::kReturn:
      return true;
    default:
      return false;
  }
}

int ProgramAst::add(Kind kind, std::string value) {
  AstNode node;
  node.kind = kind;
  node.value = std::move(value);
  node.children.resize(fields_of(kind).size());
  nodes.push_back(std::move(node));
  return size() - 1;
}

void ProgramAst::append(int parent, std::string_view field, int child) {
  int f = field_index(nodes.at(parent).kind, field);
  auto& slot = nodes[parent].children[f];
  nodes.at(child).parent = parent;
  nodes[child].parent_field = f;
  nodes[child].index_in_field = static_cast<int>(slot.size());
  slot.push_back(child);
}

const std::vector<int>& ProgramAst::field(int node, std::string_view name) const {
  return nodes.at(node).children[field_index(nodes[node].kind, name)];
}

int ProgramAst::child(int node, std::string_view name) const {
  const auto& c = field(node, name);
  return c.empty() ? -1 : c.front();
}

void ProgramAst::validate() const {
  if (nodes.empty() || nodes[0].kind != Kind::kModule) {
    throw Error("program: node 0 must be a Module");
  }
  for (int v = 0; v < size(); ++v) {
    const AstNode& n = nodes[v];
    const auto& fs = fields_of(n.kind);
    if (n.children.size() != fs.size()) {
      throw Error("program: node " + std::to_string(v) + " has wrong field count");
    }
    for (std::size_t f = 0; f < fs.size(); ++f) {
      std::size_t c = n.children[f].size();
      bool ok = true;
      switch (fs[f].kind) {
        case FieldKind::kOne: ok = c == 1; break;
        case FieldKind::kOpt: ok = c <= 1; break;
        case FieldKind::kNonemptySeq: ok = c >= 1; break;
        case FieldKind::kSeq: break;
      }
      if (!ok) {
        throw Error("program: node " + std::to_string(v) + " field '" +
                    fs[f].name + "' has " + std::to_string(c) + " children");
      }
      for (std::size_t i = 0; i < c; ++i) {
        int ch = n.children[f][i];
        if (ch <= v || ch >= size() || nodes[ch].parent != v ||
            nodes[ch].parent_field != static_cast<int>(f) ||
            nodes[ch].index_in_field != static_cast<int>(i)) {
          throw Error("program: bad child link at node " + std::to_string(v));
        }
      }
    }
    if (v > 0 && n.parent < 0) {
      throw Error("program: node " + std::to_string(v) + " has no parent");
    }
    if (n.kind == Kind::kBreak || n.kind == Kind::kContinue ||
        n.kind == Kind::kReturn) {
      const auto& block = nodes[n.parent].children[n.parent_field];
      if (block.back() != v) {
        throw Error("program: " + std::string(kind_name(n.kind)) +
                    " is not last in its block at node " + std::to_string(v));
      }
      if (n.kind != Kind::kReturn) {
        int a = n.parent;
        while (a >= 0 && !is_loop(nodes[a].kind) &&
               nodes[a].kind != Kind::kFunctionDef) {
          a = nodes[a].parent;
        }
        if (a < 0 || !is_loop(nodes[a].kind)) {
          throw Error("program: " + std::string(kind_name(n.kind)) +
                      " outside a loop at node " + std::to_string(v));
        }
      }
    }
  }
}

nlohmann::json ProgramAst::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const AstNode& n : nodes) {
    nlohmann::json node = {{"kind", kind_name(n.kind)}};
    if (!n.value.empty()) node["value"] = n.value;
    const auto& fs = fields_of(n.kind);
    nlohmann::json children = nlohmann::json::object();
    for (std::size_t f = 0; f < fs.size(); ++f) {
      if (!n.children[f].empty()) children[fs[f].name] = n.children[f];
    }
    if (!children.empty()) node["children"] = std::move(children);
    out.push_back(std::move(node));
  }
  return out;
}

ProgramAst ProgramAst::from_json(const nlohmann::json& j) {
  ProgramAst ast;
  for (const auto& node : j) {
    ast.add(kind_from_name(node.at("kind").get<std::string>()),
            node.value("value", std::string()));
  }
  for (int v = 0; v < ast.size(); ++v) {
    if (!j[v].contains("children")) continue;
    const auto& node = j[v].at("children");
    for (const auto& item : node.items()) field_index(ast.nodes[v].kind, item.key());
    for (const FieldSpec& f : fields_of(ast.nodes[v].kind)) {
      if (!node.contains(f.name)) continue;
      for (int c : node[f.name].get<std::vector<int>>()) {
        if (c < 0 || c >= ast.size()) {
          throw Error("program: child id out of range at node " + std::to_string(v));
        }
        ast.append(v, f.name, c);
      }
    }
  }
  ast.validate();
  return ast;
}

namespace {

std::string expr_text(const ProgramAst& ast, int v, bool nested) {
  const AstNode& n = ast.nodes[v];
  auto sub = [&](std::string_view field) {
    return expr_text(ast, ast.child(v, field), true);
  };
  switch (n.kind) {
    case Kind::kName:
    case Kind::kConstant:
      return n.value;
    case Kind::kBinOp:
    case Kind::kCompare: {
      std::string s = sub("left") + " " + n.value + " " + sub("right");
      return nested ? "(" + s + ")" : s;
    }
    case Kind::kBoolOp: {
      std::string s;
      for (int c : ast.field(v, "values")) {
        if (!s.empty()) s += " " + n.value + " ";
        s += expr_text(ast, c, true);
      }
      return nested ? "(" + s + ")" : s;
    }
    case Kind::kCall: {
      std::string s = n.value + "(";
      bool first = true;
      for (int c : ast.field(v, "args")) {
        if (!first) s += ", ";
        s += expr_text(ast, c, false);
        first = false;
      }
      return s + ")";
    }
    default:
      throw Error("pretty_print: node " + std::to_string(v) + " is not an expression");
  }
}

void print_block(const ProgramAst& ast, const std::vector<int>& block,
                 int depth, std::ostringstream& out);

void print_stmt(const ProgramAst& ast, int v, int depth, std::ostringstream& out) {
  const AstNode& n = ast.nodes[v];
  std::string pad(4 * depth, ' ');
  auto e = [&](std::string_view f) { return expr_text(ast, ast.child(v, f), false); };
  switch (n.kind) {
    case Kind::kFunctionDef: {
      out << pad << "def " << n.value << "(";
      bool first = true;
      for (int a : ast.field(v, "args")) {
        out << (first ? "" : ", ") << ast.nodes[a].value;
        first = false;
      }
      out << "):\n";
      print_block(ast, ast.field(v, "body"), depth + 1, out);
      break;
    }
    case Kind::kAssign:
      out << pad << e("target") << " = " << e("value") << "\n";
      break;
    case Kind::kExpr:
      out << pad << e("value") << "\n";
      break;
    case Kind::kIf:
      out << pad << "if " << e("test") << ":\n";
      print_block(ast, ast.field(v, "body"), depth + 1, out);
      if (!ast.field(v, "orelse").empty()) {
        out << pad << "else:\n";
        print_block(ast, ast.field(v, "orelse"), depth + 1, out);
      }
      break;
    case Kind::kWhile:
      out << pad << "while " << e("test") << ":\n";
      print_block(ast, ast.field(v, "body"), depth + 1, out);
      break;
    case Kind::kFor:
      out << pad << "for " << e("target") << " in " << e("iter") << ":\n";
      print_block(ast, ast.field(v, "body"), depth + 1, out);
      break;
    case Kind::kPass:
      out << pad << "pass\n";
      break;
    case Kind::kBreak:
      out << pad << "break\n";
      break;
    case Kind::kContinue:
      out << pad << "continue\n";
      break;
    case Kind::kReturn:
      out << pad << "return";
      if (ast.child(v, "value") >= 0) out << " " << e("value");
      out << "\n";
      break;
    default:
      throw Error("pretty_print: node " + std::to_string(v) + " is not a statement");
  }
}

void print_block(const ProgramAst& ast, const std::vector<int>& block,
                 int depth, std::ostringstream& out) {
  for (int s : block) print_stmt(ast, s, depth, out);
}

}  // namespace

std::string pretty_print(const ProgramAst& ast) {
  std::ostringstream out;
  print_block(ast, ast.field(0, "body"), 0, out);
  return out.str();
}

int python_node_count(const ProgramAst& ast) {
  int count = ast.size();
  for (const AstNode& n : ast.nodes) {
    switch (n.kind) {
      case Kind::kName:
        if (!(n.parent >= 0 && ast.nodes[n.parent].kind == Kind::kFunctionDef)) ++count;
        break;
      case Kind::kBinOp:
      case Kind::kBoolOp:
      case Kind::kCompare:
      case Kind::kFunctionDef:
        ++count;
        break;
      default:
        break;
    }
  }
  return count;
}

}  // namespace gfsa::python
