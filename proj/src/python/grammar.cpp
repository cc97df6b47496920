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

#include "gfsa/python/grammar.hpp"

#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace gfsa::python {

namespace {

// Statement-level backward search shared by LastWrite and LastRead lives in
// the modes SB (predecessors of a statement), CHECK (events of a statement
// that just finished) and FB/FC (break and continue statements that leave
// or restart a loop).
constexpr const char* kLastWrite = R"(
START     Target            -                       UP
UP        EXPR,EXPRH        parent|*                UP
UP        STMT              -                       SB

SB        STMT              parent|from-item        SB_H
SB_H      BODYH             prev|from-next          SB_I
SB_I      BODYH             item|from:parent        CHECK
SB_H      BODYH             prev|missing-prev       SB_FIRST
SB_FIRST  BODYH             parent|*                OWNER
OWNER     If,While          -                       SB
OWNER     For               -                       FORHDR
OWNER     FunctionDef       all:args|from-parent    PARAM
PARAM     FunctionDef.args  item|from:parent        FOUND
accept    FOUND             Target
SB        LOOP              last:body|from-parent   LOOPBACK
LOOPBACK  While.body,For.body item|from:parent      CHECK
LOOPBACK  While.body,For.body item|from:parent      FC

CHECK     Assign            go:target|from:parent   TARGET
CHECK     Expr,Pass         -                       SB
CHECK     If                last:body|from-parent   CHECK_I
CHECK     If                last:orelse|from-parent CHECK_I
CHECK     If                last:orelse|missing:orelse SB
CHECK_I   If.body,If.orelse item|from:parent        CHECK
CHECK     While             -                       SB
CHECK     For               -                       FORHDR
CHECK     LOOP              last:body|from-parent   FB_I
FORHDR    For               go:target|from:parent   TARGET
accept    TARGET            Target
TARGET    NonTarget         parent|from:target      RESUME
RESUME    Assign,For        -                       SB

FB        Break             -                       SB
FB        If                last:body|from-parent   FB_I
FB        If                last:orelse|from-parent FB_I
FB        STMT              parent|from-item        FB_P
FB_P      BODYH             prev|from-next          FB_I
FB_I      BODYH             item|from:parent        FB

FC        Continue          -                       SB
FC        If                last:body|from-parent   FC_I
FC        If                last:orelse|from-parent FC_I
FC        STMT              parent|from-item        FC_P
FC_P      BODYH             prev|from-next          FC_I
FC_I      BODYH             item|from:parent        FC
)";

// PREVE steps to the event evaluated just before the current expression,
// LAST finds the last read inside a subtree.
constexpr const char* kLastRead = R"(
START     Target            -                       PREVE
PREVE     EXPR              parent|from:left        PREVE
PREVE     EXPR              parent|from:right       PE_RIGHT
PE_RIGHT  BinOp,Compare     go:left|from:parent     LAST
PREVE     EXPR              parent|from:target      PE_TARGET
PE_TARGET Assign            go:value|from:parent    LAST
PE_TARGET For               go:iter|from:parent     LAST
PREVE     EXPR              parent|from:value       SB
PREVE     EXPR              parent|from:test        SB
PREVE     EXPR              parent|from:iter        SB
PREVE     EXPR              parent|from-item        PE_ITEM
PE_ITEM   EXPRH             prev|from-next          LAST_I
PE_ITEM   EXPRH             prev|missing-prev       PE_FIRST
PE_FIRST  EXPRH             parent|*                PREVE

accept    LAST              Target
LAST      NonTarget,Constant -                      PREVE
LAST      BinOp,Compare     go:right|from:parent    LAST
LAST      Call              last:args|from-parent   LAST_I
LAST      Call              last:args|missing:args  PREVE
LAST      BoolOp            last:values|from-parent LAST_I
LAST_I    EXPRH             item|from:parent        LAST

SB        STMT              parent|from-item        SB_H
SB_H      BODYH             prev|from-next          SB_I
SB_I      BODYH             item|from:parent        CHECK
SB_H      BODYH             prev|missing-prev       SB_FIRST
SB_FIRST  BODYH             parent|*                OWNER
OWNER     If,While,For      -                       HEADER
SB        LOOP              last:body|from-parent   LOOPBACK
LOOPBACK  While.body,For.body item|from:parent      CHECK
LOOPBACK  While.body,For.body item|from:parent      FC

HEADER    If,While          go:test|from:parent     LAST
HEADER    For               go:iter|from:parent     LAST
CHECK     Assign,Expr       go:value|from:parent    LAST
CHECK     Pass              -                       SB
CHECK     If                last:body|from-parent   CHECK_I
CHECK     If                last:orelse|from-parent CHECK_I
CHECK     If                last:orelse|missing:orelse HEADER
CHECK_I   If.body,If.orelse item|from:parent        CHECK
CHECK     While,For         -                       HEADER
CHECK     LOOP              last:body|from-parent   FB_I

FB        Break             -                       SB
FB        If                last:body|from-parent   FB_I
FB        If                last:orelse|from-parent FB_I
FB        STMT              parent|from-item        FB_P
FB_P      BODYH             prev|from-next          FB_I
FB_I      BODYH             item|from:parent        FB

FC        Continue          -                       SB
FC        If                last:body|from-parent   FC_I
FC        If                last:orelse|from-parent FC_I
FC        STMT              parent|from-item        FC_P
FC_P      BODYH             prev|from-next          FC_I
FC_I      BODYH             item|from:parent        FC
)";

constexpr const char* kNextControlFlow = R"(
START     STMT              -                       SUCC
SUCC      Assign,Expr,Pass  -                       NEXT
SUCC      If                first:body|from-parent  ITEM
SUCC      If                first:orelse|from-parent ITEM
SUCC      If                first:orelse|missing:orelse NEXT
SUCC      LOOP              first:body|from-parent  ITEM
SUCC      LOOP              -                       NEXT
SUCC      Break             -                       BREAK
SUCC      Continue          -                       CONTINUE
ITEM      BODYH             item|from:parent        FOUND
accept    FOUND             STMT

NEXT      STMT              parent|from-item        NEXT_H
NEXT_H    BODYH             next|from-prev          ITEM
NEXT_H    BODYH             next|missing-next       NEXT_END
NEXT_END  BODYH             parent|*                NEXT_OWNER
NEXT_OWNER LOOP             -                       FOUND
NEXT_OWNER If               -                       NEXT

BREAK     STMT              parent|from-item        BREAK_H
BREAK_H   BODYH             parent|*                BREAK_O
BREAK_O   If                -                       BREAK
BREAK_O   LOOP              -                       NEXT
CONTINUE  STMT              parent|from-item        CONTINUE_H
CONTINUE_H BODYH            parent|*                CONTINUE_O
CONTINUE_O If               -                       CONTINUE
CONTINUE_O LOOP             -                       FOUND
)";

const std::map<std::string, std::vector<std::string>>& node_groups() {
  static const std::map<std::string, std::vector<std::string>> groups = {
      {"STMT", {"Assign", "Expr", "If", "While", "For", "Pass", "Break",
                "Continue", "Return"}},
      {"EXPR", {"BinOp", "Compare", "BoolOp", "Call", "Target", "NonTarget",
                "Constant"}},
      {"EXPRH", {"Call.args", "BoolOp.values"}},
      {"BODYH", {"FunctionDef.body", "If.body", "If.orelse", "While.body",
                 "For.body"}},
      {"LOOP", {"While", "For"}},
  };
  return groups;
}

std::vector<std::string> expand_nodes(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto it = node_groups().find(item);
    if (it != node_groups().end()) {
      out.insert(out.end(), it->second.begin(), it->second.end());
    } else {
      out.push_back(item);
    }
  }
  return out;
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

PathGrammar PathGrammar::parse(const std::string& text) {
  PathGrammar g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty() || w[0][0] == '#') continue;
    if (w[0] == "accept") {
      if (w.size() != 3) throw Error("grammar line " + std::to_string(lineno) + ": bad accept");
      g.accepts.push_back({w[1], expand_nodes(w[2])});
      continue;
    }
    if (w.size() != 4) {
      throw Error("grammar line " + std::to_string(lineno) + ": expected 4 fields");
    }
    g.rules.push_back({w[0], expand_nodes(w[1]), w[2] == "-" ? "" : w[2], w[3]});
  }
  return g;
}

const PathGrammar& edge_grammar(EdgeKind kind) {
  static const PathGrammar ncf = PathGrammar::parse(kNextControlFlow);
  static const PathGrammar lr = PathGrammar::parse(kLastRead);
  static const PathGrammar lw = PathGrammar::parse(kLastWrite);
  switch (kind) {
    case EdgeKind::kNextControlFlow: return ncf;
    case EdgeKind::kLastRead: return lr;
    case EdgeKind::kLastWrite: return lw;
  }
  throw Error("edge_grammar: bad kind");
}

Alphabet grammar_alphabet() {
  const GraphSchema& schema = python_schema();
  Alphabet alphabet;
  std::set<std::string> moves, observations;
  for (const NodeTypeSpec& t : schema.node_types) {
    if (t.name == "Name") {
      alphabet.intern("Target");
      alphabet.intern("NonTarget");
    } else {
      alphabet.intern(t.name);
    }
    moves.insert(t.movements.begin(), t.movements.end());
    observations.insert(t.observations.begin(), t.observations.end());
  }
  for (const std::string& m : moves) {
    for (const std::string& o : observations) alphabet.intern(m + "|" + o);
  }
  return alphabet;
}

Dfa compile_grammar(const PathGrammar& grammar, const Alphabet& alphabet) {
  // Node symbols are the ones without '|'.
  std::set<int> node_symbols;
  std::vector<int> edge_symbols;
  for (int a = 0; a < alphabet.size(); ++a) {
    if (alphabet.name(a).find('|') == std::string::npos) {
      node_symbols.insert(a);
    } else {
      edge_symbols.push_back(a);
    }
  }
  Nfa nfa;
  std::map<std::string, int> pre;
  std::map<std::pair<std::string, int>, int> post;
  auto pre_state = [&](const std::string& mode) {
    auto it = pre.find(mode);
    if (it != pre.end()) return it->second;
    int q = nfa.add_state();
    pre.emplace(mode, q);
    return q;
  };
  auto post_state = [&](const std::string& mode, int symbol) {
    auto key = std::make_pair(mode, symbol);
    auto it = post.find(key);
    if (it != post.end()) return it->second;
    int q = nfa.add_state();
    post.emplace(key, q);
    return q;
  };
  auto node_ids = [&](const std::vector<std::string>& names) {
    std::vector<int> ids;
    for (const std::string& n : names) {
      int a = alphabet.find(n);
      if (a < 0 || !node_symbols.count(a)) {
        throw Error("grammar: node symbol '" + n + "' is not in the schema");
      }
      ids.push_back(a);
    }
    return ids;
  };

  nfa.starts = {pre_state(grammar.start)};
  for (const auto& rule : grammar.rules) {
    pre_state(rule.next);
    std::vector<int> labels;
    if (!rule.edge.empty()) {
      for (int a : edge_symbols) {
        if (glob_match(rule.edge, alphabet.name(a))) labels.push_back(a);
      }
      if (labels.empty()) {
        throw Error("grammar: edge pattern '" + rule.edge + "' matches no symbol");
      }
    }
    for (int sym : node_ids(rule.nodes)) {
      int from = post_state(rule.mode, sym);
      if (rule.edge.empty()) {
        nfa.transitions.push_back({from, -1, post_state(rule.next, sym)});
      } else {
        for (int l : labels) {
          nfa.transitions.push_back({from, l, pre_state(rule.next)});
        }
      }
    }
  }
  for (const auto& acc : grammar.accepts) {
    for (int sym : node_ids(acc.nodes)) {
      nfa.accepting[post_state(acc.mode, sym)] = true;
    }
  }
  for (const auto& [key, q] : post) {
    nfa.transitions.push_back({pre_state(key.first), key.second, q});
  }
  return determinize(nfa, alphabet);
}

const Dfa& edge_dfa(EdgeKind kind) {
  static std::once_flag once;
  static Dfa dfas[3];
  std::call_once(once, [] {
    Alphabet alphabet = grammar_alphabet();
    for (EdgeKind k : kAllEdgeKinds) {
      dfas[static_cast<int>(k)] = compile_grammar(edge_grammar(k), alphabet);
    }
  });
  return dfas[static_cast<int>(kind)];
}

EdgeSet grammar_oracle(const EncodedProgram& program, EdgeKind kind) {
  const Dfa& dfa = edge_dfa(kind);
  EdgeSet edges;
  auto collect = [&](const std::string& target, const std::vector<int>& starts) {
    Alphabet alphabet;
    SymbolGraph g = grammar_symbol_graph(program, target, alphabet);
    auto m = lpath_oracle(g, alphabet, dfa, starts);
    for (int s : starts) {
      for (int v = 0; v < g.num_nodes(); ++v) {
        if (m[s][v]) edges.emplace(s, v);
      }
    }
  };
  if (kind == EdgeKind::kNextControlFlow) {
    std::vector<int> starts;
    for (int v = 0; v < program.num_ast_nodes; ++v) {
      if (is_statement(static_cast<Kind>(program.graph.node_types[v]))) {
        starts.push_back(v);
      }
    }
    collect("", starts);
    return edges;
  }
  for (const std::string& id : program.identifiers()) {
    std::vector<int> starts;
    for (int v = 0; v < program.num_ast_nodes; ++v) {
      if (program.identifier[v] == id) starts.push_back(v);
    }
    collect(id, starts);
  }
  return edges;
}

}  // namespace gfsa::python
