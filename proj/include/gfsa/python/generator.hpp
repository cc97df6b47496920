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

#ifndef GFSA_PYTHON_GENERATOR_HPP_
#define GFSA_PYTHON_GENERATOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gfsa/config.hpp"
#include "gfsa/numeric.hpp"
#include "gfsa/python/ast.hpp"

namespace gfsa::python {

struct PcfgConfig {
  std::string name = "1x";
  // Number -> name, constant, arithmetic, call.
  std::vector<double> number_weights{0.25, 0.25, 0.2, 0.3};
  // Boolean -> comparison, constant, and/or.
  std::vector<double> boolean_weights{0.6, 0.1, 0.3};
  // Statement -> assign, print, if, if-else, for, while, pass.
  std::vector<double> statement_weights{0.45, 0.1, 0.1, 0.07, 0.1, 0.08, 0.1};
  // How a block ends: normal statement, return, break, continue.
  std::vector<double> block_end_weights{0.7, 0.1, 0.1, 0.1};
  // Chance that a nested block grows by one more statement while the
  // program is still below target.
  double block_continue = 0.6;
  double new_variable = 0.3;
  int max_expr_depth = 3;
  int max_block_depth = 3;
  int num_params = 2;
  int target_nodes = 150;
  int max_graph_nodes = 256;
  int max_tuples = 512;
  int max_rejections = 1000;

  void validate() const;
  // Reads keys under [pcfg]; absent keys keep their defaults.
  static PcfgConfig from_config(const Config& cfg);
  // Named size presets: target and cutoffs for "1x", "2x" and "0.5x".
  static PcfgConfig preset(const std::string& name);
};

struct GeneratedProgram {
  ProgramAst ast;
  int graph_nodes = 0;
  int tuples = 0;
  // Candidates thrown out before this one.
  int rejected = 0;
};

// Draws one program and applies the size cutoffs, redrawing as needed.
GeneratedProgram generate_program(SeededRng& rng, const PcfgConfig& config);

// The unfiltered draw, exposed for acceptance-rate measurements.
ProgramAst sample_program(SeededRng& rng, const PcfgConfig& config);

}  // namespace gfsa::python

#endif  // GFSA_PYTHON_GENERATOR_HPP_
