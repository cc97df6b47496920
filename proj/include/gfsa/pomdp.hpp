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

#ifndef GFSA_POMDP_HPP_
#define GFSA_POMDP_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfsa/automaton.hpp"
#include "gfsa/graph.hpp"
#include "gfsa/numeric.hpp"

namespace gfsa {

enum class Halt : int { kAddEdge = 0, kStop = 1, kBacktrack = 2 };
inline constexpr int kNumHalt = 3;

// Flat index space of the parameter table. Entries are grouped by
// (node type, static observation, dynamic-observation slot, memory state);
// each group holds (action, next memory state) pairs, actions ordered as the
// type's movements followed by AddEdgeAndStop, Stop and (if allowed)
// Backtrack. Types without dynamic observations have a single slot.
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const GraphSchema& schema, int num_memory);

  int num_memory() const { return num_memory_; }
  int num_types() const { return static_cast<int>(num_moves_.size()); }
  int num_moves(int type) const { return num_moves_[type]; }
  int num_halting() const { return num_halting_; }
  int num_actions(int type) const { return num_moves_[type] + num_halting_; }
  int num_slots(int type) const { return num_slots_[type]; }
  int num_observations(int type) const { return num_obs_[type]; }
  bool allow_backtrack() const { return num_halting_ == kNumHalt; }

  std::size_t group_offset(int type, int obs, int slot, int z) const;
  std::size_t entry(int type, int obs, int slot, int z, int action,
                    int z_next) const {
    return group_offset(type, obs, slot, z) +
           static_cast<std::size_t>(action) * num_memory_ + z_next;
  }
  // Action index of a halting action for the given type.
  int halt_action(int type, Halt h) const {
    return num_moves_[type] + static_cast<int>(h);
  }

  std::size_t size() const { return size_; }
  const std::vector<IndexGroup>& groups() const { return groups_; }
  std::uint64_t schema_hash() const { return schema_hash_; }

 private:
  int num_memory_ = 0;
  int num_halting_ = kNumHalt;
  std::vector<int> num_moves_;
  std::vector<int> num_obs_;
  std::vector<int> num_slots_;
  // First group of each type.
  std::vector<std::size_t> type_group_base_;
  std::vector<IndexGroup> groups_;
  std::size_t size_ = 0;
  std::uint64_t schema_hash_ = 0;
};

// Normalized probability table over the same index space as the parameters.
struct Policy {
  std::vector<double> pi;
};

// Start-node-conditioned observation: distribution over the schema's dynamic
// alphabet for an agent that started at `n0` and now stands at `node`.
using DynamicObsFn =
    std::function<std::vector<double>(int n0, int node)>;

struct PomdpInstance {
  int num_nodes = 0;
  int num_gamma = 1;
  std::uint64_t schema_hash = 0;

  // State set X of reachable (node, static observation) pairs, sorted.
  std::vector<int> state_node;
  std::vector<int> state_obs;
  std::vector<int> state_type;
  // X index of (n, initial observation of n).
  std::vector<int> initial_state;

  // Movement templates in CSR form: the successors of (x, m) are entries
  // [move_begin[r], move_begin[r + 1]) with r = move_row[x] + m.
  std::vector<int> move_row;
  std::vector<int> move_begin;
  std::vector<int> succ_state;
  std::vector<double> succ_prob;

  // Dynamic observation tensor C, stored only for states whose type is
  // dynamic: dynamic_slot[x] >= 0 indexes obs[slot][n0][gamma].
  std::vector<int> dynamic_slot;
  std::vector<double> obs;
  int num_dynamic_states = 0;

  int num_states() const { return static_cast<int>(state_node.size()); }
  double c(int slot, int n0, int gamma) const {
    return obs[(static_cast<std::size_t>(slot) * num_nodes + n0) * num_gamma +
               gamma];
  }
};

// Compiles a graph into its POMDP. Moving along movement m from n lands
// uniformly on the m-successors of n; with no successor the agent stays and
// receives the type's missing observation. `dynamic_obs` may be empty when
// the dynamic alphabet is trivial.
PomdpInstance encode_graph(const TypedGraph& graph, const GraphSchema& schema,
                           const DynamicObsFn& dynamic_obs = {});

// Schema in which every type observes (type, TRUE/FALSE) and may move along
// every edge type.
GraphSchema build_generic_schema(const std::vector<std::string>& node_types,
                                 const std::vector<std::string>& edge_types);

// Reads the plain `nodes:[{id,type}]`, `edges:[{src,dst,label}]` format and
// builds the generic schema over the labels it uses (sorted by name).
struct GenericGraph {
  GraphSchema schema;
  TypedGraph graph;
};
GenericGraph generic_graph_from_json(const nlohmann::json& j);

struct CompiledPolicy {
  ParamLayout layout;
  Policy policy;
  int z0 = 0;
  int sink = -1;
};

// Turns a DFA over node and edge type names into a policy on the generic
// encoding whose AddEdgeAndStop support is exactly the L-path relation.
CompiledPolicy dfa_to_policy(const Dfa& dfa, const GraphSchema& schema);

}  // namespace gfsa

#endif  // GFSA_POMDP_HPP_
