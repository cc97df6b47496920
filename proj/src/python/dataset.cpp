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

#include "gfsa/python/dataset.hpp"

#include <fstream>

#include "gfsa/parallel.hpp"

namespace gfsa::python {

namespace {

nlohmann::json edges_to_json(const EdgeSet& edges) {
  nlohmann::json out = nlohmann::json::array();
  for (auto [s, d] : edges) out.push_back({s, d});
  return out;
}

EdgeSet edges_from_json(const nlohmann::json& j, int num_nodes) {
  EdgeSet out;
  for (const auto& e : j) {
    int s = e.at(0).get<int>(), d = e.at(1).get<int>();
    if (s < 0 || d < 0 || s >= num_nodes || d >= num_nodes) {
      throw Error("dataset: edge (" + std::to_string(s) + ", " +
                  std::to_string(d) + ") is out of range");
    }
    out.emplace(s, d);
  }
  return out;
}

}  // namespace

std::uint64_t program_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix64(mix64(base_seed) ^ (index + 1));
}

ProgramExample make_example(std::uint64_t seed, const PcfgConfig& config) {
  SeededRng rng(seed);
  ProgramExample ex;
  ex.seed = seed;
  ex.ast = generate_program(rng, config).ast;
  ex.encoded = ast_to_graph(ex.ast);
  for (EdgeKind k : kAllEdgeKinds) {
    ex.edges[static_cast<int>(k)] = dataflow_oracle(ex.ast, k);
  }
  return ex;
}

std::vector<ProgramExample> generate_dataset(const PcfgConfig& config,
                                             std::uint64_t base_seed,
                                             std::size_t count, int workers) {
  config.validate();
  return parallel_map<ProgramExample>(count, workers, [&](std::size_t i) {
    return make_example(program_seed(base_seed, i), config);
  });
}

nlohmann::json example_to_json(const ProgramExample& ex) {
  nlohmann::json edges;
  for (EdgeKind k : kAllEdgeKinds) {
    edges[std::string(edge_kind_name(k))] = edges_to_json(ex.targets(k));
  }
  return {{"seed", ex.seed},
          {"ast", ex.ast.to_json()},
          {"graph", ex.encoded.graph.to_json(python_schema())},
          {"edges", edges}};
}

ProgramExample example_from_json(const nlohmann::json& j) {
  ProgramExample ex;
  ex.seed = j.at("seed").get<std::uint64_t>();
  ex.ast = ProgramAst::from_json(j.at("ast"));
  // The stored graph is for outside readers; rebuilding keeps helper
  // identifiers in sync with the AST.
  ex.encoded = ast_to_graph(ex.ast);
  for (EdgeKind k : kAllEdgeKinds) {
    ex.edges[static_cast<int>(k)] = edges_from_json(
        j.at("edges").at(std::string(edge_kind_name(k))), ex.encoded.num_ast_nodes);
  }
  return ex;
}

void write_dataset(const std::string& path,
                   const std::vector<ProgramExample>& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path);
  for (const auto& ex : data) out << example_to_json(ex).dump() << '\n';
  if (!out) throw Error("error writing dataset " + path);
}

std::vector<ProgramExample> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path);
  std::vector<ProgramExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error("dataset " + path + " is empty");
  return out;
}

}  // namespace gfsa::python
