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

#ifndef GFSA_PYTHON_DATAFLOW_HPP_
#define GFSA_PYTHON_DATAFLOW_HPP_

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfsa/python/ast.hpp"

namespace gfsa::python {

enum class EdgeKind : int { kNextControlFlow, kLastRead, kLastWrite };
inline constexpr EdgeKind kAllEdgeKinds[] = {
    EdgeKind::kNextControlFlow, EdgeKind::kLastRead, EdgeKind::kLastWrite};

// "ncf", "lastread", "lastwrite".
std::string_view edge_kind_name(EdgeKind kind);
EdgeKind edge_kind_from_name(std::string_view name);

// (source, destination) pairs of AST node ids, which are also the graph node
// ids of the encoded program.
using EdgeSet = std::set<std::pair<int, int>>;

// Control-flow graph over the statements of the generated function, plus
// the FunctionDef node as entry. A For header is one node that evaluates
// its iterable and binds its target on every visit, including the last.
struct ControlFlow {
  std::vector<int> nodes;
  std::vector<std::vector<int>> succ;  // indexed by AST id
  std::vector<std::vector<int>> pred;
  // Variable events of each node in evaluation order: (Name id, is_write).
  std::vector<std::vector<std::pair<int, bool>>> events;
  int entry = -1;
};

ControlFlow build_control_flow(const ProgramAst& ast);

// Ground truth by explicit control flow and fixed-point propagation:
// NextControlFlow is the successor relation on statements; LastWrite and
// LastRead connect every Name to the writes (resp. reads) of its identifier
// that reach it along some path without an intervening write (resp. read).
EdgeSet dataflow_oracle(const ProgramAst& ast, EdgeKind kind);

// Legal edge sources: statements for NextControlFlow, Names otherwise.
std::vector<int> edge_sources(const ProgramAst& ast, EdgeKind kind);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_DATAFLOW_HPP_
