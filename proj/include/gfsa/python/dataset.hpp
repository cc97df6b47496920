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

#ifndef GFSA_PYTHON_DATASET_HPP_
#define GFSA_PYTHON_DATASET_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gfsa/python/dataflow.hpp"
#include "gfsa/python/encoding.hpp"
#include "gfsa/python/generator.hpp"

namespace gfsa::python {

struct ProgramExample {
  std::uint64_t seed = 0;
  ProgramAst ast;
  EncodedProgram encoded;
  // Indexed by EdgeKind.
  std::array<EdgeSet, 3> edges;

  const EdgeSet& targets(EdgeKind kind) const {
    return edges[static_cast<int>(kind)];
  }
};

// Seed of program `index` in a dataset generated from `base_seed`.
std::uint64_t program_seed(std::uint64_t base_seed, std::uint64_t index);

// Generates one program from its own seed and labels it with the dataflow
// oracle.
ProgramExample make_example(std::uint64_t seed, const PcfgConfig& config);

std::vector<ProgramExample> generate_dataset(const PcfgConfig& config,
                                             std::uint64_t base_seed,
                                             std::size_t count, int workers);

// JSONL: one {seed, ast, graph, edges:{ncf, lastread, lastwrite}} per line.
nlohmann::json example_to_json(const ProgramExample& ex);
ProgramExample example_from_json(const nlohmann::json& j);
void write_dataset(const std::string& path,
                   const std::vector<ProgramExample>& data);
// Throws if the file is missing, unreadable or empty.
std::vector<ProgramExample> read_dataset(const std::string& path);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_DATASET_HPP_
