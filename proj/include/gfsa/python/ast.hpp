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

#ifndef GFSA_PYTHON_AST_HPP_
#define GFSA_PYTHON_AST_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gfsa::python {

enum class Kind : int {
  kModule,
  kFunctionDef,
  kAssign,
  kExpr,
  kIf,
  kWhile,
  kFor,
  kPass,
  kBreak,
  kContinue,
  kReturn,
  kBinOp,
  kCompare,
  kBoolOp,
  kCall,
  kName,
  kConstant,
};
inline constexpr int kNumKinds = 17;

enum class FieldKind { kOne, kOpt, kNonemptySeq, kSeq };

struct FieldSpec {
  std::string name;
  FieldKind kind;
  bool is_sequence() const {
    return kind == FieldKind::kNonemptySeq || kind == FieldKind::kSeq;
  }
  bool may_be_missing() const {
    return kind == FieldKind::kOpt || kind == FieldKind::kSeq;
  }
};

std::string_view kind_name(Kind k);
Kind kind_from_name(std::string_view name);
const std::vector<FieldSpec>& fields_of(Kind k);
int field_index(Kind k, std::string_view field);
bool is_statement(Kind k);

struct AstNode {
  Kind kind = Kind::kPass;
  // Identifier for Name, literal for Constant, operator for BinOp, Compare
  // and BoolOp, callee for Call.
  std::string value;
  // children[f] lists the children stored in field f of fields_of(kind).
  std::vector<std::vector<int>> children;
  int parent = -1;
  int parent_field = -1;
  int index_in_field = -1;
};

// Flat tree; node 0 is the Module root.
struct ProgramAst {
  std::vector<AstNode> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  int add(Kind kind, std::string value = {});
  void append(int parent, std::string_view field, int child);

  const std::vector<int>& field(int node, std::string_view name) const;
  int child(int node, std::string_view name) const;

  // Checks field arities, parent links and placement of Break, Continue and
  // Return at block ends.
  void validate() const;

  nlohmann::json to_json() const;
  static ProgramAst from_json(const nlohmann::json& j);
};

// Python-like source for inspection; not meant to be parsed back.
std::string pretty_print(const ProgramAst& ast);

// Node count as Python's ast module would report it for the same program:
// Name also carries a Load/Store context node, operators are nodes of their
// own, and a FunctionDef keeps its parameters under an `arguments` node.
int python_node_count(const ProgramAst& ast);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_AST_HPP_
