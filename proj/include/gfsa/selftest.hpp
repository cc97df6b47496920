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

#ifndef GFSA_SELFTEST_HPP_
#define GFSA_SELFTEST_HPP_

#include <cstdint>
#include <string>

#include "gfsa/automaton.hpp"
#include "gfsa/numeric.hpp"
#include "gfsa/pomdp.hpp"

namespace gfsa {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;  // worst observed error or mismatch count
  double limit = 0;
  std::string detail;
};

// Random graph on 1..max_nodes nodes over node types "A", "B", ... and edge
// labels "e", "f", ..., in the generic encoding.
GenericGraph random_generic_graph(SeededRng& rng, int max_nodes, int n_types,
                                  int n_labels);

// Random partial DFA with 1..max_states states over the schema's node and
// edge type names.
Dfa random_dfa(SeededRng& rng, const GraphSchema& schema, int max_states);

// Support of p(AddEdgeAndStop, n | n0) under dfa_to_policy against the
// L-path oracle on random (graph <= 8 nodes, DFA <= 4 states) pairs.
// value = number of mismatching pairs.
CheckResult check_compilation(int trials, std::uint64_t seed);

// backward_absorbing through softmax, the Backtrack reallocation, the
// derived adjacency and the focal loss against central differences on
// random generic instances. value = worst relative error.
CheckResult check_gradients(int trials, std::uint64_t seed);

}  // namespace gfsa

#endif  // GFSA_SELFTEST_HPP_
