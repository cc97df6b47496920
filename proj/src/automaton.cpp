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

#include "gfsa/automaton.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "gfsa/numeric.hpp"

namespace gfsa {

int Alphabet::intern(std::string_view symbol) {
  int found = find(symbol);
  if (found >= 0) return found;
  symbols_.emplace_back(symbol);
  return static_cast<int>(symbols_.size()) - 1;
}

int Alphabet::find(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

SymbolGraph symbol_graph(const TypedGraph& graph, const GraphSchema& schema,
                         Alphabet& alphabet) {
  SymbolGraph out;
  for (int t : graph.node_types) {
    out.node_symbols.push_back(alphabet.intern(schema.node_types[t].name));
  }
  for (const Edge& e : graph.edges) {
    const NodeTypeSpec& type = schema.node_types[graph.node_types[e.src]];
    out.arcs.push_back(
        {e.src, e.dst, alphabet.intern(type.movements[e.label])});
  }
  return out;
}

int Dfa::symbol_index(std::string_view s) const {
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (alphabet[i] == s) return static_cast<int>(i);
  }
  return -1;
}

int Dfa::complete() {
  std::size_t k = alphabet.size();
  bool total = std::none_of(delta.begin(), delta.end(),
                            [](int q) { return q < 0; });
  if (total) return -1;
  int sink = num_states++;
  accepting.push_back(false);
  delta.resize(static_cast<std::size_t>(num_states) * k, -1);
  for (int& q : delta) {
    if (q < 0) q = sink;
  }
  return sink;
}

bool Dfa::accepts(const std::vector<std::string>& word) const {
  int q = start;
  for (const std::string& s : word) {
    int a = symbol_index(s);
    if (a < 0) return false;
    q = step(q, a);
    if (q < 0) return false;
  }
  return accepting[q];
}

void Dfa::validate() const {
  if (num_states < 1) throw Error("dfa: no states");
  if (start < 0 || start >= num_states) throw Error("dfa: start out of range");
  if (static_cast<int>(accepting.size()) != num_states) {
    throw Error("dfa: accepting table has wrong length");
  }
  if (delta.size() != static_cast<std::size_t>(num_states) * alphabet.size()) {
    throw Error("dfa: transition table has wrong size");
  }
  for (int q : delta) {
    if (q < -1 || q >= num_states) throw Error("dfa: transition out of range");
  }
}

nlohmann::json Dfa::to_json() const {
  nlohmann::json accept = nlohmann::json::array();
  for (int q = 0; q < num_states; ++q) {
    if (accepting[q]) accept.push_back(q);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (int q = 0; q < num_states; ++q) {
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
      int to = step(q, static_cast<int>(a));
      if (to >= 0) {
        edges.push_back({{"from", q}, {"symbol", alphabet[a]}, {"to", to}});
      }
    }
  }
  return {{"states", num_states},
          {"start", start},
          {"accept", accept},
          {"alphabet", alphabet},
          {"delta", edges}};
}

Dfa Dfa::from_json(const nlohmann::json& j) {
  Dfa dfa;
  dfa.num_states = j.at("states").get<int>();
  dfa.start = j.at("start").get<int>();
  if (j.contains("alphabet")) {
    dfa.alphabet = j.at("alphabet").get<std::vector<std::string>>();
  }
  for (const auto& e : j.at("delta")) {
    std::string s = e.at("symbol").get<std::string>();
    if (dfa.symbol_index(s) < 0) dfa.alphabet.push_back(s);
  }
  dfa.accepting.assign(dfa.num_states, false);
  for (const auto& q : j.at("accept")) {
    int state = q.get<int>();
    if (state < 0 || state >= dfa.num_states) {
      throw Error("dfa: accepting state out of range");
    }
    dfa.accepting[state] = true;
  }
  dfa.delta.assign(static_cast<std::size_t>(dfa.num_states) *
                       dfa.alphabet.size(),
                   -1);
  for (const auto& e : j.at("delta")) {
    int from = e.at("from").get<int>();
    int to = e.at("to").get<int>();
    if (from < 0 || from >= dfa.num_states || to < 0 ||
        to >= dfa.num_states) {
      throw Error("dfa: transition state out of range");
    }
    int a = dfa.symbol_index(e.at("symbol").get<std::string>());
    std::size_t slot = static_cast<std::size_t>(from) * dfa.alphabet.size() + a;
    if (dfa.delta[slot] >= 0 && dfa.delta[slot] != to) {
      throw Error("dfa: nondeterministic transition from state " +
                  std::to_string(from));
    }
    dfa.delta[slot] = to;
  }
  dfa.validate();
  return dfa;
}

int Nfa::add_state(bool accept) {
  accepting.push_back(accept);
  return num_states++;
}

Dfa determinize(const Nfa& nfa, const Alphabet& alphabet) {
  int k = alphabet.size();
  std::vector<std::vector<int>> eps(nfa.num_states);
  // by_symbol[state] holds (symbol, to) pairs.
  std::vector<std::vector<std::pair<int, int>>> by_symbol(nfa.num_states);
  for (const Nfa::Transition& t : nfa.transitions) {
    if (t.symbol < 0) {
      eps[t.from].push_back(t.to);
    } else {
      by_symbol[t.from].emplace_back(t.symbol, t.to);
    }
  }
  auto closure = [&](std::vector<int> set) {
    std::vector<char> in(nfa.num_states, 0);
    for (int q : set) in[q] = 1;
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (int to : eps[set[i]]) {
        if (!in[to]) {
          in[to] = 1;
          set.push_back(to);
        }
      }
    }
    std::sort(set.begin(), set.end());
    return set;
  };

  Dfa dfa;
  dfa.alphabet = alphabet.symbols();
  std::map<std::vector<int>, int> index;
  std::vector<std::vector<int>> subsets;
  auto intern = [&](std::vector<int> subset) {
    auto it = index.find(subset);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(subsets.size());
    index.emplace(subset, id);
    bool accept = std::any_of(subset.begin(), subset.end(),
                              [&](int q) { return nfa.accepting[q]; });
    dfa.accepting.push_back(accept);
    dfa.delta.resize(dfa.delta.size() + k, -1);
    subsets.push_back(std::move(subset));
    return id;
  };
  dfa.start = intern(closure(nfa.starts));
  std::vector<std::vector<int>> moves(k);
  for (std::size_t cur = 0; cur < subsets.size(); ++cur) {
    for (auto& m : moves) m.clear();
    for (int q : subsets[cur]) {
      for (auto [a, to] : by_symbol[q]) moves[a].push_back(to);
    }
    for (int a = 0; a < k; ++a) {
      if (moves[a].empty()) continue;
      std::sort(moves[a].begin(), moves[a].end());
      moves[a].erase(std::unique(moves[a].begin(), moves[a].end()),
                     moves[a].end());
      int to = intern(closure(moves[a]));
      dfa.delta[cur * k + a] = to;
    }
  }
  dfa.num_states = static_cast<int>(subsets.size());
  return dfa;
}

std::vector<std::vector<bool>> lpath_oracle(const SymbolGraph& graph,
                                            const Alphabet& alphabet,
                                            const Dfa& dfa) {
  std::vector<int> starts(graph.num_nodes());
  for (int n = 0; n < graph.num_nodes(); ++n) starts[n] = n;
  return lpath_oracle(graph, alphabet, dfa, starts);
}

std::vector<std::vector<bool>> lpath_oracle(const SymbolGraph& graph,
                                            const Alphabet& alphabet,
                                            const Dfa& dfa,
                                            const std::vector<int>& starts) {
  int n = graph.num_nodes();
  // Graph symbols that the automaton does not know reject immediately.
  std::vector<int> to_dfa(alphabet.size(), -1);
  for (int a = 0; a < alphabet.size(); ++a) {
    to_dfa[a] = dfa.symbol_index(alphabet.name(a));
  }
  auto step = [&](int q, int symbol) {
    int a = to_dfa[symbol];
    return a < 0 ? -1 : dfa.step(q, a);
  };
  std::vector<std::vector<int>> out_arcs(n);
  for (std::size_t i = 0; i < graph.arcs.size(); ++i) {
    out_arcs[graph.arcs[i].src].push_back(static_cast<int>(i));
  }

  std::vector<std::vector<bool>> result(n, std::vector<bool>(n, false));
  std::vector<char> seen(static_cast<std::size_t>(n) * dfa.num_states);
  std::deque<std::pair<int, int>> queue;
  for (int n0 : starts) {
    std::fill(seen.begin(), seen.end(), 0);
    queue.clear();
    // The state after reading a node's own label.
    int q0 = step(dfa.start, graph.node_symbols[n0]);
    if (q0 < 0) continue;
    seen[static_cast<std::size_t>(n0) * dfa.num_states + q0] = 1;
    queue.emplace_back(n0, q0);
    while (!queue.empty()) {
      auto [node, q] = queue.front();
      queue.pop_front();
      if (dfa.accepting[q]) result[n0][node] = true;
      for (int arc_id : out_arcs[node]) {
        const SymbolGraph::Arc& arc = graph.arcs[arc_id];
        int q1 = step(q, arc.symbol);
        if (q1 < 0) continue;
        int q2 = step(q1, graph.node_symbols[arc.dst]);
        if (q2 < 0) continue;
        std::size_t key = static_cast<std::size_t>(arc.dst) * dfa.num_states + q2;
        if (seen[key]) continue;
        seen[key] = 1;
        queue.emplace_back(arc.dst, q2);
      }
    }
  }
  return result;
}

}  // namespace gfsa
