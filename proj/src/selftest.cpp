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

#include "gfsa/selftest.hpp"

#include <algorithm>
#include <cmath>

#include "gfsa/gfsa.hpp"
#include "gfsa/training.hpp"

namespace gfsa {

GenericGraph random_generic_graph(SeededRng& rng, int max_nodes, int n_types,
                                  int n_labels) {
  std::vector<std::string> types, labels;
  for (int t = 0; t < n_types; ++t) types.emplace_back(1, static_cast<char>('A' + t));
  for (int l = 0; l < n_labels; ++l) labels.emplace_back(1, static_cast<char>('e' + l));
  GenericGraph g;
  g.schema = build_generic_schema(types, labels);
  int n = 1 + static_cast<int>(rng.below(max_nodes));
  for (int v = 0; v < n; ++v) g.graph.node_types.push_back(static_cast<int>(rng.below(n_types)));
  int n_edges = static_cast<int>(rng.below(2 * n + 2));
  for (int e = 0; e < n_edges; ++e) {
    Edge edge;
    edge.src = static_cast<int>(rng.below(n));
    edge.dst = static_cast<int>(rng.below(n));
    edge.label = static_cast<int>(rng.below(n_labels));
    g.graph.edges.push_back(edge);
  }
  return g;
}

Dfa random_dfa(SeededRng& rng, const GraphSchema& schema, int max_states) {
  Dfa dfa;
  for (const auto& t : schema.node_types) dfa.alphabet.push_back(t.name);
  for (const auto& m : schema.node_types[0].movements) dfa.alphabet.push_back(m);
  dfa.num_states = 1 + static_cast<int>(rng.below(max_states));
  dfa.accepting.resize(dfa.num_states);
  for (int q = 0; q < dfa.num_states; ++q) dfa.accepting[q] = rng.bernoulli(0.4);
  dfa.delta.resize(dfa.num_states * dfa.alphabet.size());
  for (int& d : dfa.delta) {
    d = rng.bernoulli(0.15) ? -1 : static_cast<int>(rng.below(dfa.num_states));
  }
  return dfa;
}

CheckResult check_compilation(int trials, std::uint64_t seed) {
  CheckResult r{"compilation", true, 0, 0, ""};
  SeededRng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    GenericGraph g = random_generic_graph(rng, 8, 2 + static_cast<int>(rng.below(2)),
                                          1 + static_cast<int>(rng.below(2)));
    Dfa dfa = random_dfa(rng, g.schema, 4);
    CompiledPolicy c = dfa_to_policy(dfa, g.schema);
    PomdpInstance inst = encode_graph(g.graph, g.schema);
    // Every accepted path has at most |nodes| * |states| steps before it
    // repeats a product state, so this many iterations reach all support.
    int t_max = 4 * inst.num_states() * c.layout.num_memory() + 8;
    auto dist = solve_absorbing(inst, c.layout, c.policy, c.z0, t_max);
    Alphabet alphabet;
    auto sg = symbol_graph(g.graph, g.schema, alphabet);
    auto expect = lpath_oracle(sg, alphabet, dfa);
    int n = g.graph.num_nodes();
    for (int s = 0; s < n; ++s) {
      for (int v = 0; v < n; ++v) {
        bool got = dist.prob(s, Halt::kAddEdge, v) > 1e-9;
        if (got != expect[s][v]) {
          r.value += 1;
          if (r.detail.empty()) {
            r.detail = "trial " + std::to_string(trial) + " pair (" + std::to_string(s) +
                       ", " + std::to_string(v) + ")";
          }
        }
      }
    }
  }
  r.passed = r.value == 0;
  return r;
}

CheckResult check_gradients(int trials, std::uint64_t seed) {
  CheckResult r{"gradients", true, 0, 1e-4, ""};
  SeededRng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    GenericGraph g = random_generic_graph(rng, 4, 2, 2);
    PomdpInstance inst = encode_graph(g.graph, g.schema);
    int nz = 1 + static_cast<int>(rng.below(2));
    ParamLayout layout(g.schema, nz);
    AutomatonParams p;
    p.num_memory = nz;
    p.t_max = 64;
    p.eps_bt_stop = 0.05;
    p.theta.resize(layout.size());
    for (double& t : p.theta) t = rng.normal();
    int n = g.graph.num_nodes();
    python::EdgeSet targets;
    for (int s = 0; s < n; ++s) {
      for (int v = 0; v < n; ++v) {
        if (rng.bernoulli(0.3)) targets.insert({s, v});
      }
    }
    std::vector<int> rows(n);
    for (int s = 0; s < n; ++s) rows[s] = s;
    auto loss = [&](std::span<const double> theta) {
      AutomatonParams q = p;
      q.theta.assign(theta.begin(), theta.end());
      Policy pol = normalize_policy(layout, q);
      auto dist = solve_absorbing(inst, layout, pol, q.z0, q.t_max);
      return focal_loss(derived_adjacency(dist, q).a, rows, targets, 2.0).loss;
    };
    Policy pol = normalize_policy(layout, p);
    auto dist = solve_absorbing(inst, layout, pol, p.z0, p.t_max);
    auto focal = focal_loss(derived_adjacency(dist, p).a, rows, targets, 2.0);
    auto back = derived_adjacency_vjp(dist, p, focal.grad);
    auto grad = backward_absorbing(inst, layout, p, pol, dist, back.dprobs);
    auto fd = central_fd_gradient(loss, p.theta, 1e-5);
    double diff = 0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      diff += (fd[i] - grad[i]) * (fd[i] - grad[i]);
    }
    double fd_norm = 0;
    for (double x : fd) fd_norm += x * x;
    double rel = std::sqrt(diff) / std::max(std::sqrt(fd_norm), 1e-12);
    if (rel > r.value) {
      r.value = rel;
      r.detail = "worst at trial " + std::to_string(trial);
    }
  }
  r.passed = r.value < r.limit;
  return r;
}

}  // namespace gfsa
