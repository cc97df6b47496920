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

#ifndef GFSA_GFSA_HPP_
#define GFSA_GFSA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gfsa/numeric.hpp"
#include "gfsa/pomdp.hpp"
#include "json.hpp"

namespace gfsa {

struct AutomatonParams {
  std::vector<double> theta;
  int num_memory = 1;
  int z0 = 0;
  double eps_bt_stop = 0.01;
  // Optional output adjustment A = sigmoid(a * logit(A_hat) + b).
  bool adjust = false;
  double adjust_a = 1.0;
  double adjust_b = 0.0;
  int t_max = 128;

  void validate(const ParamLayout& layout) const;
};

// Dirichlet-perturbed initialization around a base distribution that moves
// with probability 0.95 and keeps its memory state with probability 0.8.
// With `log_form` the logits are log(q + 0.001), otherwise q itself.
AutomatonParams init_params(SeededRng& rng, const ParamLayout& layout,
                            double beta, bool log_form);

// The base distribution used by init_params, over the full index space.
std::vector<double> base_distribution(const ParamLayout& layout);

// Softmax per group, then a fraction eps of every Backtrack probability is
// moved to the Stop action with the same next memory state.
Policy normalize_policy(const ParamLayout& layout,
                        const AutomatonParams& params);

// Pulls dL/dpi back to dL/dtheta (eps is treated as a constant).
std::vector<double> normalize_policy_vjp(const ParamLayout& layout,
                                         const AutomatonParams& params,
                                         std::span<const double> dpi);

struct AbsorbingDistribution {
  int num_nodes = 0;
  int num_rows = 0;  // |X| * |Z|
  int t_max = 0;
  int z0 = 0;
  std::vector<int> starts;
  // probs[(s * 3 + action) * num_nodes + n_T]
  std::vector<double> probs;
  // Retained Richardson iterate x_K, laid out [row][s] with row = x*|Z|+z.
  std::vector<double> x;

  double prob(std::size_t s, Halt h, int n) const {
    return probs[(s * kNumHalt + static_cast<int>(h)) * num_nodes + n];
  }
  std::size_t prob_index(std::size_t s, Halt h, int n) const {
    return (s * kNumHalt + static_cast<int>(h)) * num_nodes + n;
  }
};

// Absorbing probabilities p(a_T, n_T | n_0) for each start node in `starts`,
// computed with t_max Richardson iterations x <- delta + Q x. The per-start
// transition matrix is never formed; all starts are iterated together.
AbsorbingDistribution solve_absorbing(const PomdpInstance& instance,
                                      const ParamLayout& layout,
                                      const Policy& policy, int z0, int t_max,
                                      const std::vector<int>& starts);
AbsorbingDistribution solve_absorbing(const PomdpInstance& instance,
                                      const ParamLayout& layout,
                                      const Policy& policy, int z0,
                                      int t_max);

// dL/dpi for a cotangent on `forward.probs`, via the transposed system
// iterated for the same number of steps as the forward solve.
std::vector<double> backward_absorbing_policy(
    const PomdpInstance& instance, const ParamLayout& layout,
    const Policy& policy, const AbsorbingDistribution& forward,
    std::span<const double> dprobs);

// Full chain to dL/dtheta, including the normalization Jacobians.
std::vector<double> backward_absorbing(const PomdpInstance& instance,
                                       const ParamLayout& layout,
                                       const AutomatonParams& params,
                                       const Policy& policy,
                                       const AbsorbingDistribution& forward,
                                       std::span<const double> dprobs);

// N x N adjacency conditioned on not backtracking. Rows of nodes that were
// not solved as starts are zero.
struct DerivedAdjacency {
  DenseMatrix a;
  DenseMatrix a_hat;
};

inline constexpr double kLogitClamp = 1e-12;
inline constexpr double kMinHaltingMass = 1e-30;

DerivedAdjacency derived_adjacency(const AbsorbingDistribution& dist,
                                   const AutomatonParams& params);

struct AdjacencyGrad {
  std::vector<double> dprobs;
  double da = 0;
  double db = 0;
};
AdjacencyGrad derived_adjacency_vjp(const AbsorbingDistribution& dist,
                                    const AutomatonParams& params,
                                    const DenseMatrix& da);

// One or more parameter tables sharing a schema, plus free-form metadata.
struct Checkpoint {
  std::uint64_t schema_hash = 0;
  std::vector<AutomatonParams> tables;
  nlohmann::json meta = nlohmann::json::object();
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace gfsa

#endif  // GFSA_GFSA_HPP_
