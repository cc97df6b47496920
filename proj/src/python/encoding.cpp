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

#include "gfsa/python/encoding.hpp"

#include <set>

namespace gfsa::python {

namespace {

GraphSchema make_schema() {
  GraphSchema schema;
  schema.dynamic_observations = {"no", "yes"};
  std::vector<NodeTypeSpec> helpers;
  for (int k = 0; k < kNumKinds; ++k) {
    Kind kind = static_cast<Kind>(k);
    NodeTypeSpec t;
    t.name = std::string(kind_name(kind));
    t.dynamic = kind == Kind::kName;
    t.observations.push_back("from:parent");
    if (kind != Kind::kModule) {
      t.movements.push_back("parent");
      t.missing_observation.push_back(-1);
    }
    for (const FieldSpec& f : fields_of(kind)) {
      t.observations.push_back("from:" + f.name);
    }
    for (const FieldSpec& f : fields_of(kind)) {
      int missing = -1;
      if (f.may_be_missing()) {
        t.observations.push_back("missing:" + f.name);
        missing = static_cast<int>(t.observations.size()) - 1;
      }
      if (f.is_sequence()) {
        for (const char* m : {"first:", "last:", "all:"}) {
          t.movements.push_back(m + f.name);
          t.missing_observation.push_back(missing);
        }
        NodeTypeSpec h;
        h.name = t.name + "." + f.name;
        h.movements = {"parent", "item", "next", "prev"};
        h.observations = {"from-parent", "from-item", "from-next",
                          "from-prev",   "missing-next", "missing-prev"};
        h.missing_observation = {-1, -1, 4, 5};
        helpers.push_back(std::move(h));
      } else {
        t.movements.push_back("go:" + f.name);
        t.missing_observation.push_back(missing);
      }
    }
    schema.node_types.push_back(std::move(t));
  }
  for (auto& h : helpers) schema.node_types.push_back(std::move(h));
  schema.validate();
  return schema;
}

}  // namespace

const GraphSchema& python_schema() {
  static const GraphSchema schema = make_schema();
  return schema;
}

DynamicObsFn EncodedProgram::dynamic_obs() const {
  std::vector<std::string> ids = identifier;
  return [ids](int n0, int v) -> std::vector<double> {
    bool same = !ids[n0].empty() && ids[n0] == ids[v];
    return same ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  };
}

std::vector<std::string> EncodedProgram::identifiers() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& id : identifier) {
    if (!id.empty() && seen.insert(id).second) out.push_back(id);
  }
  return out;
}

EncodedProgram ast_to_graph(const ProgramAst& ast) {
  const GraphSchema& schema = python_schema();
  EncodedProgram out;
  out.num_ast_nodes = ast.size();
  for (const AstNode& n : ast.nodes) {
    out.graph.node_types.push_back(static_cast<int>(n.kind));
    out.identifier.push_back(n.kind == Kind::kName ? n.value : std::string());
  }
  auto add_edge = [&](int src, int dst, const std::string& move,
                      const std::string& obs) {
    int st = out.graph.node_types[src];
    int dt = out.graph.node_types[dst];
    Edge e;
    e.src = src;
    e.dst = dst;
    e.label = schema.find_movement(st, move);
    e.arrival = schema.find_observation(dt, obs);
    if (e.label < 0 || e.arrival < 0) {
      throw Error("ast_to_graph: bad label " + move + "/" + obs + " at node " +
                  std::to_string(src));
    }
    out.graph.edges.push_back(e);
  };
  for (int v = 0; v < ast.size(); ++v) {
    Kind kind = ast.nodes[v].kind;
    const auto& fs = fields_of(kind);
    for (std::size_t f = 0; f < fs.size(); ++f) {
      const std::string& name = fs[f].name;
      const auto& kids = ast.nodes[v].children[f];
      if (!fs[f].is_sequence()) {
        for (int c : kids) {
          add_edge(v, c, "go:" + name, "from:parent");
          add_edge(c, v, "parent", "from:" + name);
        }
        continue;
      }
      int helper_type =
          schema.find_type(std::string(kind_name(kind)) + "." + name);
      std::vector<int> helpers;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        helpers.push_back(out.graph.num_nodes());
        out.graph.node_types.push_back(helper_type);
        out.identifier.emplace_back();
      }
      for (std::size_t i = 0; i < kids.size(); ++i) {
        int h = helpers[i];
        if (i == 0) add_edge(v, h, "first:" + name, "from-parent");
        if (i + 1 == kids.size()) add_edge(v, h, "last:" + name, "from-parent");
        add_edge(v, h, "all:" + name, "from-parent");
        add_edge(h, v, "parent", "from:" + name);
        add_edge(h, kids[i], "item", "from:parent");
        add_edge(kids[i], h, "parent", "from-item");
        if (i + 1 < kids.size()) {
          add_edge(h, helpers[i + 1], "next", "from-prev");
          add_edge(helpers[i + 1], h, "prev", "from-next");
        }
      }
    }
  }
  return out;
}

PomdpInstance encode_program(const EncodedProgram& program) {
  return encode_graph(program.graph, python_schema(), program.dynamic_obs());
}

SymbolGraph grammar_symbol_graph(const EncodedProgram& program,
                                 const std::string& target, Alphabet& alphabet) {
  const GraphSchema& schema = python_schema();
  const TypedGraph& g = program.graph;
  SymbolGraph out;
  int name_type = static_cast<int>(Kind::kName);
  for (int v = 0; v < g.num_nodes(); ++v) {
    int t = g.node_types[v];
    if (t == name_type) {
      out.node_symbols.push_back(
          alphabet.intern(program.identifier[v] == target ? "Target" : "NonTarget"));
    } else {
      out.node_symbols.push_back(alphabet.intern(schema.node_types[t].name));
    }
  }
  std::vector<std::vector<bool>> has_move(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    has_move[v].assign(schema.node_types[g.node_types[v]].movements.size(), false);
  }
  for (const Edge& e : g.edges) {
    const NodeTypeSpec& st = schema.node_types[g.node_types[e.src]];
    const NodeTypeSpec& dt = schema.node_types[g.node_types[e.dst]];
    has_move[e.src][e.label] = true;
    int obs = e.arrival >= 0 ? e.arrival : dt.default_arrival;
    out.arcs.push_back({e.src, e.dst,
                        alphabet.intern(st.movements[e.label] + "|" +
                                        dt.observations[obs])});
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    const NodeTypeSpec& t = schema.node_types[g.node_types[v]];
    for (std::size_t m = 0; m < t.movements.size(); ++m) {
      if (has_move[v][m] || t.missing_observation[m] < 0) continue;
      out.arcs.push_back(
          {v, v, alphabet.intern(t.movements[m] + "|" +
                                 t.observations[t.missing_observation[m]])});
    }
  }
  return out;
}

}  // namespace gfsa::python
