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

#ifndef GFSA_PYTHON_ENCODING_HPP_
#define GFSA_PYTHON_ENCODING_HPP_

#include <string>
#include <vector>

#include "gfsa/automaton.hpp"
#include "gfsa/graph.hpp"
#include "gfsa/pomdp.hpp"
#include "gfsa/python/ast.hpp"

namespace gfsa::python {

// Shared schema for every encoded program: one type per AST kind, then one
// helper type "Kind.field" per sequence field. Movements are "parent",
// "go:f", "first:f", "last:f", "all:f" on AST types and "parent", "item",
// "next", "prev" on helpers. The dynamic alphabet is {no, yes}: whether the
// current Name carries the same identifier as the start node.
const GraphSchema& python_schema();

struct EncodedProgram {
  TypedGraph graph;
  // Graph node v < num_ast_nodes is AST node v; the rest are helpers.
  int num_ast_nodes = 0;
  // Identifier at Name nodes, empty elsewhere.
  std::vector<std::string> identifier;

  DynamicObsFn dynamic_obs() const;
  // Distinct identifiers in order of first appearance.
  std::vector<std::string> identifiers() const;
};

EncodedProgram ast_to_graph(const ProgramAst& ast);

PomdpInstance encode_program(const EncodedProgram& program);

// Symbol graph read by the grammar oracle: nodes are labelled by type name,
// with Name nodes relabelled "Target" when their identifier equals `target`
// and "NonTarget" otherwise; arcs are labelled "movement|observation", and a
// movement without successor becomes a self-loop carrying its missing
// observation.
SymbolGraph grammar_symbol_graph(const EncodedProgram& program,
                                 const std::string& target, Alphabet& alphabet);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_ENCODING_HPP_
