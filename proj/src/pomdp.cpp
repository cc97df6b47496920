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

#include "gfsa/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gfsa {

ParamLayout::ParamLayout(const GraphSchema& schema, int num_memory)
    : num_memory_(num_memory),
      num_halting_(schema.allow_backtrack ? kNumHalt : kNumHalt - 1),
      schema_hash_(schema.hash()) {
  if (num_memory < 1) throw Error("layout: memory size must be positive");
  int gamma = static_cast<int>(schema.dynamic_observations.size());
  std::size_t offset = 0;
  for (const NodeTypeSpec& t : schema.node_types) {
    num_moves_.push_back(static_cast<int>(t.movements.size()));
    num_obs_.push_back(static_cast<int>(t.observations.size()));
    num_slots_.push_back(t.dynamic ? gamma : 1);
    type_group_base_.push_back(groups_.size());
    std::size_t group_size =
        static_cast<std::size_t>(num_moves_.back() + num_halting_) *
        num_memory;
    int n_groups = num_obs_.back() * num_slots_.back() * num_memory;
    for (int g = 0; g < n_groups; ++g) {
      groups_.push_back({offset, group_size});
      offset += group_size;
    }
  }
  size_ = offset;
}

std::size_t ParamLayout::group_offset(int type, int obs, int slot,
                                      int z) const {
  std::size_t g = type_group_base_[type] +
                  (static_cast<std::size_t>(obs) * num_slots_[type] + slot) *
                      num_memory_ +
                  z;
  return groups_[g].begin;
}

PomdpInstance encode_graph(const TypedGraph& graph, const GraphSchema& schema,
                           const DynamicObsFn& dynamic_obs) {
  schema.validate();
  graph.validate(schema);
  int n = graph.num_nodes();

  // targets[node][movement] = (dst, arrival observation) per edge.
  std::vector<std::vector<std::vector<std::pair<int, int>>>> targets(n);
  for (int v = 0; v < n; ++v) {
    targets[v].resize(schema.node_types[graph.node_types[v]].movements.size());
  }
  for (const Edge& e : graph.edges) {
    const NodeTypeSpec& dst_type = schema.node_types[graph.node_types[e.dst]];
    int arrival = e.arrival >= 0 ? e.arrival : dst_type.default_arrival;
    targets[e.src][e.label].emplace_back(e.dst, arrival);
  }
  auto moves_of = [&](int v, int m) {
    std::vector<std::pair<int, int>> out = targets[v][m];
    if (out.empty()) {
      const NodeTypeSpec& t = schema.node_types[graph.node_types[v]];
      if (t.missing_observation[m] < 0) {
        throw Error("encode_graph: node " + std::to_string(v) + " (type " +
                    t.name + ") has no successor for movement '" +
                    t.movements[m] + "'");
      }
      out.emplace_back(v, t.missing_observation[m]);
    }
    return out;
  };

  std::set<std::pair<int, int>> reachable;
  std::vector<std::pair<int, int>> frontier;
  for (int v = 0; v < n; ++v) {
    auto s = std::make_pair(
        v, schema.node_types[graph.node_types[v]].initial_observation);
    if (reachable.insert(s).second) frontier.push_back(s);
  }
  while (!frontier.empty()) {
    auto [v, obs] = frontier.back();
    frontier.pop_back();
    for (std::size_t m = 0; m < targets[v].size(); ++m) {
      for (auto s : moves_of(v, static_cast<int>(m))) {
        if (reachable.insert(s).second) frontier.push_back(s);
      }
    }
  }

  PomdpInstance inst;
  inst.num_nodes = n;
  inst.num_gamma = static_cast<int>(schema.dynamic_observations.size());
  inst.schema_hash = schema.hash();
  std::map<std::pair<int, int>, int> index;
  for (auto s : reachable) {
    index.emplace(s, static_cast<int>(inst.state_node.size()));
    inst.state_node.push_back(s.first);
    inst.state_obs.push_back(s.second);
    inst.state_type.push_back(graph.node_types[s.first]);
  }
  inst.initial_state.resize(n);
  for (int v = 0; v < n; ++v) {
    inst.initial_state[v] = index.at(
        {v, schema.node_types[graph.node_types[v]].initial_observation});
  }

  inst.move_begin.push_back(0);
  for (int x = 0; x < inst.num_states(); ++x) {
    int v = inst.state_node[x];
    inst.move_row.push_back(static_cast<int>(inst.move_begin.size()) - 1);
    for (std::size_t m = 0; m < targets[v].size(); ++m) {
      auto succ = moves_of(v, static_cast<int>(m));
      double p = 1.0 / static_cast<double>(succ.size());
      std::map<int, double> merged;
      for (auto s : succ) merged[index.at(s)] += p;
      for (auto [to, prob] : merged) {
        inst.succ_state.push_back(to);
        inst.succ_prob.push_back(prob);
      }
      inst.move_begin.push_back(static_cast<int>(inst.succ_state.size()));
    }
  }

  inst.dynamic_slot.assign(inst.num_states(), -1);
  for (int x = 0; x < inst.num_states(); ++x) {
    if (schema.node_types[inst.state_type[x]].dynamic) {
      inst.dynamic_slot[x] = inst.num_dynamic_states++;
    }
  }
  int gamma = inst.num_gamma;
  inst.obs.assign(
      static_cast<std::size_t>(inst.num_dynamic_states) * n * gamma, 0.0);
  for (int x = 0; x < inst.num_states(); ++x) {
    int slot = inst.dynamic_slot[x];
    if (slot < 0) continue;
    for (int n0 = 0; n0 < n; ++n0) {
      double* row =
          &inst.obs[(static_cast<std::size_t>(slot) * n + n0) * gamma];
      if (!dynamic_obs) {
        row[0] = 1.0;
        continue;
      }
      std::vector<double> dist = dynamic_obs(n0, inst.state_node[x]);
      if (static_cast<int>(dist.size()) != gamma) {
        throw Error("encode_graph: dynamic observation has wrong arity at node " +
                    std::to_string(inst.state_node[x]));
      }
      double total = 0;
      for (int g = 0; g < gamma; ++g) {
        if (!(dist[g] >= 0)) {
          throw Error("encode_graph: negative dynamic observation at node " +
                      std::to_string(inst.state_node[x]));
        }
        row[g] = dist[g];
        total += dist[g];
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw Error("encode_graph: dynamic observation does not sum to 1 at node " +
                    std::to_string(inst.state_node[x]));
      }
    }
  }
  return inst;
}

GraphSchema build_generic_schema(const std::vector<std::string>& node_types,
                                 const std::vector<std::string>& edge_types) {
  if (node_types.empty()) throw Error("generic schema: no node types");
  if (edge_types.empty()) throw Error("generic schema: no edge types");
  GraphSchema schema;
  for (const std::string& name : node_types) {
    NodeTypeSpec t;
    t.name = name;
    t.movements = edge_types;
    t.observations = {"TRUE", "FALSE"};
    t.missing_observation.assign(edge_types.size(), 1);
    t.default_arrival = 0;
    t.initial_observation = 0;
    schema.node_types.push_back(std::move(t));
  }
  schema.validate();
  return schema;
}

GenericGraph generic_graph_from_json(const nlohmann::json& j) {
  std::set<std::string> types;
  std::set<std::string> labels;
  for (const auto& node : j.at("nodes")) {
    types.insert(node.at("type").get<std::string>());
  }
  for (const auto& e : j.at("edges")) {
    labels.insert(e.at("label").get<std::string>());
  }
  GenericGraph out;
  out.schema = build_generic_schema({types.begin(), types.end()},
                                    {labels.begin(), labels.end()});
  out.graph = TypedGraph::from_json(j, out.schema);
  return out;
}

CompiledPolicy dfa_to_policy(const Dfa& dfa_in, const GraphSchema& schema) {
  dfa_in.validate();
  std::set<std::string> known;
  for (const NodeTypeSpec& t : schema.node_types) {
    known.insert(t.name);
    for (const std::string& m : t.movements) known.insert(m);
    if (t.observations != std::vector<std::string>{"TRUE", "FALSE"}) {
      throw Error("dfa_to_policy: schema is not the generic encoding");
    }
  }
  for (const std::string& s : dfa_in.alphabet) {
    if (!known.count(s)) {
      throw Error("dfa_to_policy: symbol '" + s +
                  "' is neither a node type nor an edge type");
    }
  }
  Dfa dfa = dfa_in;
  dfa.complete();
  // Symbols the automaton never mentions lead straight to a reject state.
  int sink = -1;
  for (int q = 0; q < dfa.num_states && sink < 0; ++q) {
    if (dfa.accepting[q]) continue;
    bool absorbing = true;
    for (std::size_t a = 0; a < dfa.alphabet.size(); ++a) {
      if (dfa.step(q, static_cast<int>(a)) != q) absorbing = false;
    }
    if (absorbing) sink = q;
  }
  if (sink < 0) {
    sink = dfa.num_states++;
    dfa.accepting.push_back(false);
    dfa.delta.resize(dfa.delta.size() + dfa.alphabet.size(), sink);
  }
  auto step = [&](int q, const std::string& symbol) {
    int a = dfa.symbol_index(symbol);
    return a < 0 ? sink : dfa.step(q, a);
  };

  CompiledPolicy out;
  out.layout = ParamLayout(schema, dfa.num_states);
  out.z0 = dfa.start;
  out.sink = sink;
  out.policy.pi.assign(out.layout.size(), 0.0);
  for (int type = 0; type < static_cast<int>(schema.node_types.size());
       ++type) {
    const NodeTypeSpec& t = schema.node_types[type];
    int stop = out.layout.halt_action(type, Halt::kStop);
    int add = out.layout.halt_action(type, Halt::kAddEdge);
    for (int obs = 0; obs < 2; ++obs) {
      for (int z = 0; z < dfa.num_states; ++z) {
        int half = step(z, t.name);
        if (obs == 1 || z == sink || half == sink) {
          out.policy.pi[out.layout.entry(type, obs, 0, z, stop, z)] = 1.0;
          continue;
        }
        std::vector<std::size_t> choices;
        if (dfa.accepting[half]) {
          choices.push_back(out.layout.entry(type, obs, 0, z, add, half));
        }
        for (std::size_t m = 0; m < t.movements.size(); ++m) {
          choices.push_back(out.layout.entry(type, obs, 0, z,
                                             static_cast<int>(m),
                                             step(half, t.movements[m])));
        }
        for (std::size_t c : choices) {
          out.policy.pi[c] += 1.0 / static_cast<double>(choices.size());
        }
      }
    }
  }
  return out;
}

}  // namespace gfsa
