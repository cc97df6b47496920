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

#ifndef GFSA_PYTHON_GRAMMAR_HPP_
#define GFSA_PYTHON_GRAMMAR_HPP_

#include <string>
#include <vector>

#include "gfsa/automaton.hpp"
#include "gfsa/python/dataflow.hpp"
#include "gfsa/python/encoding.hpp"

namespace gfsa::python {

// A regular path grammar in mode form. Each rule says: in `mode`, standing
// on a node whose symbol is in `nodes`, either follow an arc whose label
// matches `edge` (a glob over "movement|observation") into `next`, or, for
// an empty `edge`, switch to `next` without moving.
struct PathGrammar {
  struct Rule {
    std::string mode;
    std::vector<std::string> nodes;
    std::string edge;
    std::string next;
  };
  struct Accept {
    std::string mode;
    std::vector<std::string> nodes;
  };
  std::string start = "START";
  std::vector<Rule> rules;
  std::vector<Accept> accepts;

  // One rule per line: "MODE nodes edge NEXT" with "-" for a stay-in-place
  // rule, or "accept MODE nodes". Node lists are comma-separated symbols or
  // the groups STMT, EXPR, EXPRH, BODYH, LOOP.
  static PathGrammar parse(const std::string& text);
};

// The built-in grammar for an edge kind.
const PathGrammar& edge_grammar(EdgeKind kind);

// Alphabet of the grammar symbol graphs: node type names with Name split into
// Target/NonTarget, and every "movement|observation" pair of the schema.
Alphabet grammar_alphabet();

// Compiles a grammar to an NFA over `alphabet` and determinizes it. Throws if
// the grammar names a symbol the schema does not have.
Dfa compile_grammar(const PathGrammar& grammar, const Alphabet& alphabet);

// Cached DFA for an edge kind.
const Dfa& edge_dfa(EdgeKind kind);

// Edges found by L-path search on the encoded program, one identifier at a
// time for LastRead and LastWrite.
EdgeSet grammar_oracle(const EncodedProgram& program, EdgeKind kind);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_GRAMMAR_HPP_
