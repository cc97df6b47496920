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

// Independent reference implementations used only by the tests. Nothing here
// reuses the library's solver internals: the dense oracle rebuilds the chain
// directly from graph edges.

#ifndef GFSA_TESTS_ORACLES_HPP_
#define GFSA_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "gfsa/automaton.hpp"
#include "gfsa/gfsa.hpp"
#include "gfsa/graph.hpp"
#include "gfsa/numeric.hpp"
#include "gfsa/pomdp.hpp"

namespace oracle {

using gfsa::GraphSchema;
using gfsa::TypedGraph;

struct SmallProblem {
  GraphSchema schema;
  TypedGraph graph;
  // Dynamic observation as a function of (n0, node).
  std::vector<std::vector<std::vector<double>>> dyn;  // [n0][node][gamma]
  gfsa::PomdpInstance instance;
  gfsa::ParamLayout layout;
  gfsa::AutomatonParams params;
};

// Random schema with 2-3 types (one dynamic with a 2-letter alphabet), a
// random graph on 2-5 nodes and standard normal logits. Retries until
// |X| * |Z| <= max_rows.
inline SmallProblem random_problem(gfsa::SeededRng& rng, int max_rows,
                                   bool allow_backtrack = true) {
  while (true) {
    SmallProblem p;
    int n_types = 2 + static_cast<int>(rng.below(2));
    p.schema.dynamic_observations = {"no", "yes"};
    p.schema.allow_backtrack = allow_backtrack;
    for (int t = 0; t < n_types; ++t) {
      gfsa::NodeTypeSpec spec;
      spec.name = "T" + std::to_string(t);
      int moves = 1 + static_cast<int>(rng.below(3));
      int obs = 1 + static_cast<int>(rng.below(3));
      for (int m = 0; m < moves; ++m) {
        spec.movements.push_back("m" + std::to_string(m));
      }
      for (int o = 0; o < obs; ++o) {
        spec.observations.push_back("o" + std::to_string(o));
      }
      for (int m = 0; m < moves; ++m) {
        spec.missing_observation.push_back(static_cast<int>(rng.below(obs)));
      }
      spec.default_arrival = static_cast<int>(rng.below(obs));
      spec.initial_observation = static_cast<int>(rng.below(obs));
      spec.dynamic = t == 0;
      p.schema.node_types.push_back(spec);
    }
    int n = 2 + static_cast<int>(rng.below(4));
    for (int v = 0; v < n; ++v) {
      p.graph.node_types.push_back(static_cast<int>(rng.below(n_types)));
    }
    int n_edges = static_cast<int>(rng.below(2 * n + 1));
    for (int e = 0; e < n_edges; ++e) {
      gfsa::Edge edge;
      edge.src = static_cast<int>(rng.below(n));
      edge.dst = static_cast<int>(rng.below(n));
      const auto& st = p.schema.node_types[p.graph.node_types[edge.src]];
      const auto& dt = p.schema.node_types[p.graph.node_types[edge.dst]];
      edge.label = static_cast<int>(rng.below(st.movements.size()));
      edge.arrival = rng.bernoulli(0.5)
                         ? -1
                         : static_cast<int>(rng.below(dt.observations.size()));
      p.graph.edges.push_back(edge);
    }
    p.dyn.assign(n, std::vector<std::vector<double>>(n));
    for (int n0 = 0; n0 < n; ++n0) {
      for (int v = 0; v < n; ++v) {
        double a = rng.uniform();
        p.dyn[n0][v] = {a, 1.0 - a};
      }
    }
    auto dyn = p.dyn;
    p.instance = gfsa::encode_graph(
        p.graph, p.schema, [dyn](int n0, int v) { return dyn[n0][v]; });
    int nz = 1 + static_cast<int>(rng.below(3));
    if (p.instance.num_states() * nz > max_rows) continue;
    p.layout = gfsa::ParamLayout(p.schema, nz);
    p.params.num_memory = nz;
    p.params.z0 = static_cast<int>(rng.below(nz));
    p.params.eps_bt_stop = 0.001 + 0.099 * rng.uniform();
    p.params.theta.resize(p.layout.size());
    for (double& t : p.params.theta) t = rng.normal();
    return p;
  }
}

struct DenseChain {
  Eigen::MatrixXd q;  // K x K, column = source
  Eigen::MatrixXd h;  // (3 * N) x K
  int delta = 0;
};

// Builds Q_{n0} and H for one start directly from the graph edges.
inline DenseChain dense_chain(const SmallProblem& p, const gfsa::Policy& policy,
                              int n0, int z0) {
  const auto& inst = p.instance;
  int nz = p.layout.num_memory();
  int k = inst.num_states() * nz;
  int n = p.graph.num_nodes();
  std::map<std::pair<int, int>, int> index;
  for (int x = 0; x < inst.num_states(); ++x) {
    index[{inst.state_node[x], inst.state_obs[x]}] = x;
  }
  DenseChain c;
  c.q = Eigen::MatrixXd::Zero(k, k);
  c.h = Eigen::MatrixXd::Zero(3 * n, k);
  for (int x = 0; x < inst.num_states(); ++x) {
    int v = inst.state_node[x];
    int type = p.graph.node_types[v];
    const auto& spec = p.schema.node_types[type];
    int moves = static_cast<int>(spec.movements.size());
    int slots = spec.dynamic ? 2 : 1;
    for (int slot = 0; slot < slots; ++slot) {
      double cw = spec.dynamic ? p.dyn[n0][v][slot] : 1.0;
      for (int z = 0; z < nz; ++z) {
        int col = x * nz + z;
        for (int m = 0; m < moves; ++m) {
          std::vector<std::pair<int, int>> succ;
          for (const auto& e : p.graph.edges) {
            if (e.src != v || e.label != m) continue;
            const auto& dt = p.schema.node_types[p.graph.node_types[e.dst]];
            succ.emplace_back(e.dst, e.arrival >= 0 ? e.arrival
                                                    : dt.default_arrival);
          }
          if (succ.empty()) succ.emplace_back(v, spec.missing_observation[m]);
          for (auto s : succ) {
            int x1 = index.at(s);
            for (int z1 = 0; z1 < nz; ++z1) {
              double pi = policy.pi[p.layout.entry(type, inst.state_obs[x],
                                                   slot, z, m, z1)];
              c.q(x1 * nz + z1, col) += cw * pi / succ.size();
            }
          }
        }
        for (int h = 0; h < p.layout.num_halting(); ++h) {
          for (int z1 = 0; z1 < nz; ++z1) {
            double pi = policy.pi[p.layout.entry(type, inst.state_obs[x], slot,
                                                 z, moves + h, z1)];
            c.h(h * n + v, col) += cw * pi;
          }
        }
      }
    }
  }
  int spec_init = p.schema.node_types[p.graph.node_types[n0]].initial_observation;
  c.delta = index.at({n0, spec_init}) * nz + z0;
  return c;
}

// p(a, n | n0) from the exact solve of (I - Q) x = delta, laid out [a][n].
inline std::vector<double> dense_absorbing(const SmallProblem& p,
                                           const gfsa::Policy& policy, int n0,
                                           int z0) {
  DenseChain c = dense_chain(p, policy, n0, z0);
  int k = static_cast<int>(c.q.rows());
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(k);
  delta(c.delta) = 1.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k) - c.q;
  Eigen::VectorXd x = a.partialPivLu().solve(delta);
  Eigen::VectorXd probs = c.h * x;
  return {probs.data(), probs.data() + probs.size()};
}

inline double relative_error(const std::vector<double>& a,
                             const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

// Random graph over node types {A, B, ...} and edge labels {e, f, ...}.
inline gfsa::GenericGraph random_generic_graph(gfsa::SeededRng& rng,
                                               int max_nodes, int n_types,
                                               int n_labels) {
  std::vector<std::string> types, labels;
  for (int t = 0; t < n_types; ++t) types.push_back(std::string(1, 'A' + t));
  for (int l = 0; l < n_labels; ++l) labels.push_back(std::string(1, 'e' + l));
  gfsa::GenericGraph g;
  g.schema = gfsa::build_generic_schema(types, labels);
  int n = 1 + static_cast<int>(rng.below(max_nodes));
  for (int v = 0; v < n; ++v) {
    g.graph.node_types.push_back(static_cast<int>(rng.below(n_types)));
  }
  int n_edges = static_cast<int>(rng.below(2 * n + 2));
  for (int e = 0; e < n_edges; ++e) {
    gfsa::Edge edge;
    edge.src = static_cast<int>(rng.below(n));
    edge.dst = static_cast<int>(rng.below(n));
    edge.label = static_cast<int>(rng.below(n_labels));
    g.graph.edges.push_back(edge);
  }
  return g;
}

// Random partial DFA over the symbols of a generic schema.
inline gfsa::Dfa random_dfa(gfsa::SeededRng& rng, const GraphSchema& schema,
                            int max_states) {
  gfsa::Dfa dfa;
  for (const auto& t : schema.node_types) dfa.alphabet.push_back(t.name);
  for (const auto& m : schema.node_types[0].movements) dfa.alphabet.push_back(m);
  dfa.num_states = 1 + static_cast<int>(rng.below(max_states));
  dfa.start = 0;
  dfa.accepting.resize(dfa.num_states);
  for (int q = 0; q < dfa.num_states; ++q) dfa.accepting[q] = rng.bernoulli(0.4);
  dfa.delta.resize(dfa.num_states * dfa.alphabet.size());
  for (int& d : dfa.delta) {
    d = rng.bernoulli(0.15) ? -1 : static_cast<int>(rng.below(dfa.num_states));
  }
  return dfa;
}

// Walks every path of length <= max_edges from n0 and records the end nodes
// whose label word the DFA accepts. Paths are advanced one edge per layer;
// the frontier at layer d is the set of (node, state) pairs reached by some
// path with exactly d edges, so no visited-set shortcut is involved.
inline std::vector<bool> enumerate_lpaths(const gfsa::GenericGraph& g,
                                          const gfsa::Dfa& dfa, int n0,
                                          int max_edges) {
  int n = g.graph.num_nodes();
  std::vector<bool> out(n, false);
  auto feed = [&](int q, const std::string& symbol) {
    int a = dfa.symbol_index(symbol);
    return a < 0 ? -1 : dfa.step(q, a);
  };
  auto node_symbol = [&](int v) {
    return g.schema.node_types[g.graph.node_types[v]].name;
  };
  std::set<std::pair<int, int>> layer;
  int q0 = feed(dfa.start, node_symbol(n0));
  if (q0 >= 0) layer.insert({n0, q0});
  for (int depth = 0; !layer.empty(); ++depth) {
    for (auto [v, q] : layer) {
      if (dfa.accepting[q]) out[v] = true;
    }
    if (depth == max_edges) break;
    std::set<std::pair<int, int>> next;
    for (auto [v, q] : layer) {
      for (const auto& e : g.graph.edges) {
        if (e.src != v) continue;
        int q1 = feed(q, g.schema.node_types[0].movements[e.label]);
        if (q1 < 0) continue;
        int q2 = feed(q1, node_symbol(e.dst));
        if (q2 >= 0) next.insert({e.dst, q2});
      }
    }
    layer = std::move(next);
  }
  return out;
}

}  // namespace oracle

#endif  // GFSA_TESTS_ORACLES_HPP_
