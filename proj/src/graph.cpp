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

#include "gfsa/graph.hpp"

#include <set>

#include "gfsa/numeric.hpp"

namespace gfsa {

namespace {

int index_of(const std::vector<std::string>& names, std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

int GraphSchema::find_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    if (node_types[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int GraphSchema::find_movement(int type, std::string_view name) const {
  return index_of(node_types.at(type).movements, name);
}

int GraphSchema::find_observation(int type, std::string_view name) const {
  return index_of(node_types.at(type).observations, name);
}

void GraphSchema::validate() const {
  if (node_types.empty()) throw Error("schema: no node types");
  if (dynamic_observations.empty()) {
    throw Error("schema: dynamic observation alphabet is empty");
  }
  std::set<std::string> names;
  for (const NodeTypeSpec& t : node_types) {
    if (!names.insert(t.name).second) {
      throw Error("schema: duplicate node type '" + t.name + "'");
    }
    if (t.observations.empty()) {
      throw Error("schema: node type '" + t.name + "' has no observations");
    }
    if (t.missing_observation.size() != t.movements.size()) {
      throw Error("schema: node type '" + t.name +
                  "' missing-observation table has wrong length");
    }
    int n_obs = static_cast<int>(t.observations.size());
    for (int m : t.missing_observation) {
      if (m < -1 || m >= n_obs) {
        throw Error("schema: node type '" + t.name +
                    "' has an out-of-range missing observation");
      }
    }
    if (t.default_arrival < 0 || t.default_arrival >= n_obs ||
        t.initial_observation < 0 || t.initial_observation >= n_obs) {
      throw Error("schema: node type '" + t.name +
                  "' has an out-of-range arrival observation");
    }
  }
}

nlohmann::json GraphSchema::to_json() const {
  nlohmann::json types = nlohmann::json::array();
  for (const NodeTypeSpec& t : node_types) {
    types.push_back({{"name", t.name},
                     {"movements", t.movements},
                     {"observations", t.observations},
                     {"missing_observation", t.missing_observation},
                     {"default_arrival", t.default_arrival},
                     {"initial_observation", t.initial_observation},
                     {"dynamic", t.dynamic}});
  }
  return {{"node_types", types},
          {"dynamic_observations", dynamic_observations},
          {"allow_backtrack", allow_backtrack}};
}

GraphSchema GraphSchema::from_json(const nlohmann::json& j) {
  GraphSchema schema;
  schema.node_types.clear();
  for (const auto& t : j.at("node_types")) {
    NodeTypeSpec spec;
    spec.name = t.at("name").get<std::string>();
    spec.movements = t.at("movements").get<std::vector<std::string>>();
    spec.observations = t.at("observations").get<std::vector<std::string>>();
    spec.missing_observation =
        t.at("missing_observation").get<std::vector<int>>();
    spec.default_arrival = t.value("default_arrival", 0);
    spec.initial_observation = t.value("initial_observation", 0);
    spec.dynamic = t.value("dynamic", false);
    schema.node_types.push_back(std::move(spec));
  }
  schema.dynamic_observations =
      j.at("dynamic_observations").get<std::vector<std::string>>();
  schema.allow_backtrack = j.value("allow_backtrack", true);
  schema.validate();
  return schema;
}

std::uint64_t GraphSchema::hash() const { return fnv1a64(to_json().dump()); }

void TypedGraph::validate(const GraphSchema& schema) const {
  int n_types = static_cast<int>(schema.node_types.size());
  for (std::size_t n = 0; n < node_types.size(); ++n) {
    if (node_types[n] < 0 || node_types[n] >= n_types) {
      throw Error("graph: node " + std::to_string(n) + " has unknown type");
    }
  }
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= num_nodes() || e.dst < 0 ||
        e.dst >= num_nodes()) {
      throw Error("graph: edge endpoint out of range at node " +
                  std::to_string(e.src));
    }
    const NodeTypeSpec& src_type = schema.node_types[node_types[e.src]];
    if (e.label < 0 ||
        e.label >= static_cast<int>(src_type.movements.size())) {
      throw Error("graph: edge label is not a movement of node " +
                  std::to_string(e.src) + " (type " + src_type.name + ")");
    }
    const NodeTypeSpec& dst_type = schema.node_types[node_types[e.dst]];
    if (e.arrival < -1 ||
        e.arrival >= static_cast<int>(dst_type.observations.size())) {
      throw Error("graph: arrival observation out of range at node " +
                  std::to_string(e.dst));
    }
  }
}

nlohmann::json TypedGraph::to_json(const GraphSchema& schema) const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t n = 0; n < node_types.size(); ++n) {
    nodes.push_back(
        {{"id", n}, {"type", schema.node_types[node_types[n]].name}});
  }
  nlohmann::json out_edges = nlohmann::json::array();
  for (const Edge& e : edges) {
    const NodeTypeSpec& src_type = schema.node_types[node_types[e.src]];
    nlohmann::json je = {{"src", e.src},
                         {"dst", e.dst},
                         {"label", src_type.movements[e.label]}};
    if (e.arrival >= 0) {
      je["obs"] = schema.node_types[node_types[e.dst]].observations[e.arrival];
    }
    out_edges.push_back(std::move(je));
  }
  return {{"nodes", nodes}, {"edges", out_edges}};
}

TypedGraph TypedGraph::from_json(const nlohmann::json& j,
                                 const GraphSchema& schema) {
  TypedGraph g;
  const auto& nodes = j.at("nodes");
  g.node_types.assign(nodes.size(), -1);
  for (const auto& n : nodes) {
    int id = n.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(nodes.size())) {
      throw Error("graph: node ids must be dense, got " + std::to_string(id));
    }
    std::string type = n.at("type").get<std::string>();
    int t = schema.find_type(type);
    if (t < 0) {
      throw Error("graph: node " + std::to_string(id) + " has unknown type '" +
                  type + "'");
    }
    g.node_types[id] = t;
  }
  for (int t : g.node_types) {
    if (t < 0) throw Error("graph: node ids must be dense");
  }
  for (const auto& e : j.at("edges")) {
    Edge edge;
    edge.src = e.at("src").get<int>();
    edge.dst = e.at("dst").get<int>();
    if (edge.src < 0 || edge.src >= g.num_nodes() || edge.dst < 0 ||
        edge.dst >= g.num_nodes()) {
      throw Error("graph: edge endpoint out of range");
    }
    std::string label = e.at("label").get<std::string>();
    edge.label = schema.find_movement(g.node_types[edge.src], label);
    if (edge.label < 0) {
      throw Error("graph: edge label '" + label +
                  "' is not a movement of node " + std::to_string(edge.src));
    }
    if (e.contains("obs")) {
      std::string obs = e.at("obs").get<std::string>();
      edge.arrival = schema.find_observation(g.node_types[edge.dst], obs);
      if (edge.arrival < 0) {
        throw Error("graph: unknown arrival observation '" + obs +
                    "' at node " + std::to_string(edge.dst));
      }
    }
    g.edges.push_back(edge);
  }
  return g;
}

}  // namespace gfsa
