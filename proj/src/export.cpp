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

#include "gfsa/export.hpp"

#include <cstdio>
#include <sstream>

namespace gfsa {

namespace {

const char* const kHaltNames[kNumHalt] = {"AddEdgeAndStop", "Stop", "Backtrack"};

template <typename Fn>
void for_each_entry(const GraphSchema& schema, const ParamLayout& layout,
                    const Policy& policy, double threshold, Fn fn) {
  for (int type = 0; type < layout.num_types(); ++type) {
    const NodeTypeSpec& t = schema.node_types[type];
    for (int obs = 0; obs < layout.num_observations(type); ++obs) {
      for (int slot = 0; slot < layout.num_slots(type); ++slot) {
        std::string where = t.name + "/" + t.observations[obs];
        if (t.dynamic) where += "/" + schema.dynamic_observations[slot];
        for (int z = 0; z < layout.num_memory(); ++z) {
          for (int a = 0; a < layout.num_actions(type); ++a) {
            for (int z2 = 0; z2 < layout.num_memory(); ++z2) {
              double p = policy.pi[layout.entry(type, obs, slot, z, a, z2)];
              if (p >= threshold) fn(where, z, action_name(schema, type, a), z2, p);
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::string action_name(const GraphSchema& schema, int type, int action) {
  const NodeTypeSpec& t = schema.node_types[type];
  int moves = static_cast<int>(t.movements.size());
  if (action < moves) return t.movements[action];
  return kHaltNames[action - moves];
}

std::string policy_dot(const GraphSchema& schema, const ParamLayout& layout,
                       const Policy& policy, int z0, double threshold) {
  std::ostringstream out;
  out << "digraph policy {\n  rankdir=LR;\n  start [shape=point];\n";
  for (int z = 0; z < layout.num_memory(); ++z) {
    out << "  z" << z << " [shape=circle];\n";
  }
  out << "  start -> z" << z0 << ";\n";
  for_each_entry(schema, layout, policy, threshold,
                 [&](const std::string& where, int z, const std::string& action,
                     int z2, double p) {
                   char prob[32];
                   std::snprintf(prob, sizeof prob, "%.3f", p);
                   out << "  z" << z << " -> z" << z2 << " [label=\"" << where << ": "
                       << action << " (" << prob << ")\"];\n";
                 });
  out << "}\n";
  return out.str();
}

nlohmann::json policy_json(const GraphSchema& schema, const ParamLayout& layout,
                           const AutomatonParams& params, const Policy& policy,
                           double threshold) {
  nlohmann::json entries = nlohmann::json::array();
  for_each_entry(schema, layout, policy, threshold,
                 [&](const std::string& where, int z, const std::string& action,
                     int z2, double p) {
                   entries.push_back(
                       {{"at", where}, {"z", z}, {"action", action}, {"z_next", z2}, {"p", p}});
                 });
  return {{"schema_hash", hex64(layout.schema_hash())},
          {"num_memory", params.num_memory},
          {"z0", params.z0},
          {"eps_bt_stop", params.eps_bt_stop},
          {"t_max", params.t_max},
          {"threshold", threshold},
          {"entries", entries}};
}

std::string matrix_csv(const DenseMatrix& m) {
  std::ostringstream out;
  out.precision(12);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gfsa
