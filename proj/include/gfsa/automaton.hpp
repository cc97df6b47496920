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

#ifndef GFSA_AUTOMATON_HPP_
#define GFSA_AUTOMATON_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "gfsa/graph.hpp"
#include "json.hpp"

namespace gfsa {

// Interned symbols shared by node labels and edge labels.
class Alphabet {
 public:
  int intern(std::string_view symbol);
  // -1 if absent.
  int find(std::string_view symbol) const;
  const std::string& name(int id) const { return symbols_.at(id); }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
};

// A graph whose nodes and edges carry symbols of one alphabet. Paths are read
// as words node, edge, node, ..., node.
struct SymbolGraph {
  struct Arc {
    int src;
    int dst;
    int symbol;
  };
  std::vector<int> node_symbols;
  std::vector<Arc> arcs;

  int num_nodes() const { return static_cast<int>(node_symbols.size()); }
};

// Labels nodes with their type names and edges with their movement names.
SymbolGraph symbol_graph(const TypedGraph& graph, const GraphSchema& schema,
                         Alphabet& alphabet);

// Deterministic automaton. Missing transitions (-1) reject.
struct Dfa {
  int num_states = 0;
  int start = 0;
  std::vector<bool> accepting;
  std::vector<std::string> alphabet;
  // delta[q * |alphabet| + a]
  std::vector<int> delta;

  int step(int q, int symbol) const {
    if (q < 0) return -1;
    return delta[static_cast<std::size_t>(q) * alphabet.size() + symbol];
  }
  int symbol_index(std::string_view s) const;

  // Adds an explicit non-accepting sink so delta is total. Returns the sink
  // index, or -1 if delta was already total.
  int complete();
  bool accepts(const std::vector<std::string>& word) const;

  void validate() const;
  nlohmann::json to_json() const;
  static Dfa from_json(const nlohmann::json& j);
};

// Nondeterministic automaton with epsilon moves.
struct Nfa {
  int num_states = 0;
  std::vector<int> starts;
  std::vector<bool> accepting;
  struct Transition {
    int from;
    int symbol;  // -1 for epsilon
    int to;
  };
  std::vector<Transition> transitions;

  int add_state(bool accept = false);
};

// Subset construction over the given alphabet size. Only reachable subsets
// are materialized; the empty subset is represented by missing transitions.
Dfa determinize(const Nfa& nfa, const Alphabet& alphabet);

// Boolean N x N reachability: (n0, nT) is true iff some path from n0 to nT
// spells a word accepted by `dfa`. Computed by breadth-first search over the
// product of graph nodes and automaton states. Alphabet symbols are matched
// by name.
std::vector<std::vector<bool>> lpath_oracle(const SymbolGraph& graph,
                                            const Alphabet& alphabet,
                                            const Dfa& dfa);

// Same, restricted to the given start rows; other rows are all false.
std::vector<std::vector<bool>> lpath_oracle(const SymbolGraph& graph,
                                            const Alphabet& alphabet,
                                            const Dfa& dfa,
                                            const std::vector<int>& starts);

}  // namespace gfsa

#endif  // GFSA_AUTOMATON_HPP_
