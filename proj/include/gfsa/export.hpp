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

#ifndef GFSA_EXPORT_HPP_
#define GFSA_EXPORT_HPP_

#include <string>

#include "gfsa/gfsa.hpp"
#include "gfsa/pomdp.hpp"

namespace gfsa {

// Name of action `a` for a node type: its movements, then the halting
// actions.
std::string action_name(const GraphSchema& schema, int type, int action);

// The policy as an automaton over memory states. Every (type, observation,
// slot, action, next state) entry with probability >= threshold becomes an
// edge z -> z' labelled "type/obs[/slot]: action (p)".
std::string policy_dot(const GraphSchema& schema, const ParamLayout& layout,
                       const Policy& policy, int z0, double threshold = 0.01);

// Same entries as a JSON list, plus the table's scalar settings.
nlohmann::json policy_json(const GraphSchema& schema, const ParamLayout& layout,
                           const AutomatonParams& params, const Policy& policy,
                           double threshold = 0.01);

std::string matrix_csv(const DenseMatrix& m);

}  // namespace gfsa

#endif  // GFSA_EXPORT_HPP_
