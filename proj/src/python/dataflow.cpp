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

#include "gfsa/python/dataflow.hpp"

#include <deque>
#include <map>

#include "gfsa/numeric.hpp"

namespace gfsa::python {

std::string_view edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kNextControlFlow: return "ncf";
    case EdgeKind::kLastRead: return "lastread";
    case EdgeKind::kLastWrite: return "lastwrite";
  }
  return "?";
}

EdgeKind edge_kind_from_name(std::string_view name) {
  for (EdgeKind k : kAllEdgeKinds) {
    if (edge_kind_name(k) == name) return k;
  }
  throw Error("unknown edge kind '" + std::string(name) + "'");
}

namespace {

bool is_loop(Kind k) { return k == Kind::kWhile || k == Kind::kFor; }

void collect_reads(const ProgramAst& ast, int v,
                   std::vector<std::pair<int, bool>>& out) {
  const AstNode& n = ast.nodes[v];
  if (n.kind == Kind::kName) {
    out.emplace_back(v, false);
    return;
  }
  for (const auto& field : n.children) {
    for (int c : field) collect_reads(ast, c, out);
  }
}

class FlowBuilder {
 public:
  explicit FlowBuilder(const ProgramAst& ast) : ast_(ast) {}

  ControlFlow build() {
    ControlFlow cf;
    int n = ast_.size();
    cf.succ.assign(n, {});
    cf.pred.assign(n, {});
    cf.events.assign(n, {});
    for (int v = 0; v < n; ++v) {
      if (ast_.nodes[v].kind == Kind::kFunctionDef) {
        if (cf.entry >= 0) throw Error("control flow: more than one function");
        cf.entry = v;
      }
    }
    if (cf.entry < 0) throw Error("control flow: no function definition");
    cf.nodes.push_back(cf.entry);
    for (int a : ast_.field(cf.entry, "args")) cf.events[cf.entry].emplace_back(a, true);
    cf.succ[cf.entry].push_back(ast_.field(cf.entry, "body").front());
    for (int v = 0; v < n; ++v) {
      if (!is_statement(ast_.nodes[v].kind)) continue;
      cf.nodes.push_back(v);
      cf.succ[v] = successors(v);
      cf.events[v] = events(v);
    }
    for (int v : cf.nodes) {
      for (int s : cf.succ[v]) cf.pred[s].push_back(v);
    }
    return cf;
  }

 private:
  // Statement executed after s completes normally, or -1 on function exit.
  int after(int s) const {
    const AstNode& n = ast_.nodes[s];
    const auto& block = ast_.nodes[n.parent].children[n.parent_field];
    if (n.index_in_field + 1 < static_cast<int>(block.size())) {
      return block[n.index_in_field + 1];
    }
    Kind owner = ast_.nodes[n.parent].kind;
    if (is_loop(owner)) return n.parent;
    if (owner == Kind::kIf) return after(n.parent);
    return -1;
  }

  int enclosing_loop(int s) const {
    int a = ast_.nodes[s].parent;
    while (a >= 0 && !is_loop(ast_.nodes[a].kind)) a = ast_.nodes[a].parent;
    if (a < 0) throw Error("control flow: jump outside a loop at node " + std::to_string(s));
    return a;
  }

  std::vector<int> successors(int s) const {
    std::vector<int> out;
    auto add = [&](int t) {
      if (t >= 0) out.push_back(t);
    };
    switch (ast_.nodes[s].kind) {
      case Kind::kIf: {
        add(ast_.field(s, "body").front());
        const auto& orelse = ast_.field(s, "orelse");
        add(orelse.empty() ? after(s) : orelse.front());
        break;
      }
      case Kind::kWhile:
      case Kind::kFor:
        add(ast_.field(s, "body").front());
        add(after(s));
        break;
      case Kind::kBreak:
        add(after(enclosing_loop(s)));
        break;
      case Kind::kContinue:
        add(enclosing_loop(s));
        break;
      case Kind::kReturn:
        break;
      default:
        add(after(s));
    }
    return out;
  }

  std::vector<std::pair<int, bool>> events(int s) const {
    std::vector<std::pair<int, bool>> out;
    auto reads = [&](std::string_view field) {
      int c = ast_.child(s, field);
      if (c >= 0) collect_reads(ast_, c, out);
    };
    switch (ast_.nodes[s].kind) {
      case Kind::kAssign:
        reads("value");
        out.emplace_back(ast_.child(s, "target"), true);
        break;
      case Kind::kFor:
        reads("iter");
        out.emplace_back(ast_.child(s, "target"), true);
        break;
      case Kind::kExpr:
      case Kind::kReturn:
        reads("value");
        break;
      case Kind::kIf:
      case Kind::kWhile:
        reads("test");
        break;
      default:
        break;
    }
    return out;
  }

  const ProgramAst& ast_;
};

// Events of kind `want_write` reaching each node entry: a node's own last
// such event per identifier replaces the incoming ones for that identifier.
std::vector<std::set<int>> reaching(const ProgramAst& ast, const ControlFlow& cf,
                                    bool want_write) {
  int n = ast.size();
  std::vector<std::set<int>> in(n), out(n);
  auto transfer = [&](int v) {
    std::map<std::string, int> last;
    for (auto [name, is_write] : cf.events[v]) {
      if (is_write == want_write) last[ast.nodes[name].value] = name;
    }
    std::set<int> result;
    for (int e : in[v]) {
      if (!last.count(ast.nodes[e].value)) result.insert(e);
    }
    for (const auto& kv : last) result.insert(kv.second);
    return result;
  };
  std::deque<int> work(cf.nodes.begin(), cf.nodes.end());
  std::vector<char> queued(n, 0);
  for (int v : cf.nodes) queued[v] = 1;
  while (!work.empty()) {
    int v = work.front();
    work.pop_front();
    queued[v] = 0;
    std::set<int> fresh;
    for (int p : cf.pred[v]) fresh.insert(out[p].begin(), out[p].end());
    in[v] = std::move(fresh);
    std::set<int> o = transfer(v);
    if (o != out[v]) {
      out[v] = std::move(o);
      for (int s : cf.succ[v]) {
        if (!queued[s]) {
          queued[s] = 1;
          work.push_back(s);
        }
      }
    }
  }
  return in;
}

}  // namespace

ControlFlow build_control_flow(const ProgramAst& ast) {
  return FlowBuilder(ast).build();
}

std::vector<int> edge_sources(const ProgramAst& ast, EdgeKind kind) {
  std::vector<int> out;
  for (int v = 0; v < ast.size(); ++v) {
    Kind k = ast.nodes[v].kind;
    if (kind == EdgeKind::kNextControlFlow ? is_statement(k) : k == Kind::kName) {
      out.push_back(v);
    }
  }
  return out;
}

EdgeSet dataflow_oracle(const ProgramAst& ast, EdgeKind kind) {
  ControlFlow cf = build_control_flow(ast);
  EdgeSet edges;
  if (kind == EdgeKind::kNextControlFlow) {
    for (int v : cf.nodes) {
      if (v == cf.entry) continue;
      for (int s : cf.succ[v]) edges.emplace(v, s);
    }
    return edges;
  }
  bool want_write = kind == EdgeKind::kLastWrite;
  auto in = reaching(ast, cf, want_write);
  for (int v : cf.nodes) {
    const auto& ev = cf.events[v];
    for (std::size_t i = 0; i < ev.size(); ++i) {
      int name = ev[i].first;
      const std::string& id = ast.nodes[name].value;
      bool local = false;
      for (std::size_t j = i; j-- > 0;) {
        if (ev[j].second == want_write && ast.nodes[ev[j].first].value == id) {
          edges.emplace(name, ev[j].first);
          local = true;
          break;
        }
      }
      if (local) continue;
      for (int e : in[v]) {
        if (ast.nodes[e].value == id) edges.emplace(name, e);
      }
    }
  }
  return edges;
}

}  // namespace gfsa::python
