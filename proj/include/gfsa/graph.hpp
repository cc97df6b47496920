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

#ifndef GFSA_GRAPH_HPP_
#define GFSA_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gfsa {

// Per node type: the movements the agent may attempt there and the static
// observations it can receive on arrival.
struct NodeTypeSpec {
  std::string name;
  std::vector<std::string> movements;
  std::vector<std::string> observations;
  // Observation received when a movement has no successor; -1 means the
  // movement must always succeed.
  std::vector<int> missing_observation;
  // Used on arrival along an edge that does not carry its own observation.
  int default_arrival = 0;
  // Observation of the very first step at this node.
  int initial_observation = 0;
  // Whether the start-node-conditioned observation applies at this type.
  bool dynamic = false;
};

struct GraphSchema {
  std::vector<NodeTypeSpec> node_types;
  // Shared alphabet of start-node-conditioned observations; a single entry
  // means the observation is trivial.
  std::vector<std::string> dynamic_observations{"none"};
  bool allow_backtrack = true;

  int find_type(std::string_view name) const;
  int find_movement(int type, std::string_view name) const;
  int find_observation(int type, std::string_view name) const;

  // Throws if the schema is internally inconsistent.
  void validate() const;
  std::uint64_t hash() const;

  nlohmann::json to_json() const;
  static GraphSchema from_json(const nlohmann::json& j);
};

struct Edge {
  int src = 0;
  int dst = 0;
  // Movement index in the source node's type.
  int label = 0;
  // Observation index in the destination node's type, or -1 for the
  // destination type's default arrival observation.
  int arrival = -1;
};

struct TypedGraph {
  std::vector<int> node_types;
  std::vector<Edge> edges;

  int num_nodes() const { return static_cast<int>(node_types.size()); }

  // Throws if the graph does not conform to `schema`, naming the node.
  void validate(const GraphSchema& schema) const;

  nlohmann::json to_json(const GraphSchema& schema) const;
  static TypedGraph from_json(const nlohmann::json& j,
                              const GraphSchema& schema);
};

}  // namespace gfsa

#endif  // GFSA_GRAPH_HPP_
