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

#include "gfsa/python/generator.hpp"

#include <cmath>

#include "gfsa/python/encoding.hpp"

namespace gfsa::python {

namespace {

void check_weights(const std::vector<double>& w, std::size_t n,
                   const std::string& what) {
  if (w.size() != n) {
    throw Error("pcfg: " + what + " needs " + std::to_string(n) + " weights");
  }
  double total = 0;
  for (double x : w) {
    if (!(x >= 0)) throw Error("pcfg: negative weight in " + what);
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("pcfg: " + what + " weights sum to " + std::to_string(total));
  }
}

class Sampler {
 public:
  Sampler(SeededRng& rng, const PcfgConfig& cfg) : rng_(rng), cfg_(cfg) {}

  ProgramAst run() {
    ast_.add(Kind::kModule);
    int fn = ast_.add(Kind::kFunctionDef, "generated_function");
    ast_.append(0, "body", fn);
    scopes_.emplace_back();
    for (int p = 0; p < cfg_.num_params; ++p) {
      std::string name(1, static_cast<char>('a' + p));
      ast_.append(fn, "args", ast_.add(Kind::kName, name));
      scopes_.back().push_back(name);
    }
    next_var_ = cfg_.num_params;
    while (python_node_count(ast_) < cfg_.target_nodes) statement(fn, "body", 0, false);
    if (ast_.field(fn, "body").empty()) {
      ast_.append(fn, "body", ast_.add(Kind::kPass));
    } else {
      block_end(fn, "body", false);
    }
    return std::move(ast_);
  }

 private:
  int pick(const std::vector<double>& w) {
    return static_cast<int>(rng_.categorical(w));
  }

  std::vector<std::string> visible() const {
    std::vector<std::string> out;
    for (const auto& s : scopes_) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

  int name_read() {
    auto names = visible();
    return ast_.add(Kind::kName, names[rng_.below(names.size())]);
  }

  std::string fresh_or_existing() {
    auto names = visible();
    if (names.empty() || rng_.bernoulli(cfg_.new_variable)) {
      return "v" + std::to_string(next_var_++);
    }
    return names[rng_.below(names.size())];
  }

  void define(const std::string& name) {
    for (const auto& s : scopes_) {
      for (const auto& n : s) {
        if (n == name) return;
      }
    }
    scopes_.back().push_back(name);
  }

  int number(int depth) {
    std::vector<double> w = cfg_.number_weights;
    if (visible().empty()) w[0] = 0;
    if (depth >= cfg_.max_expr_depth) w[2] = w[3] = 0;
    switch (pick(w)) {
      case 0:
        return name_read();
      case 1:
        return ast_.add(Kind::kConstant, std::to_string(rng_.below(100)));
      case 2: {
        static const char* ops[] = {"+", "-", "*", "/"};
        int v = ast_.add(Kind::kBinOp, ops[rng_.below(4)]);
        ast_.append(v, "left", number(depth + 1));
        ast_.append(v, "right", number(depth + 1));
        return v;
      }
      default: {
        int arity = 1 + static_cast<int>(rng_.below(4));
        std::string callee = (rng_.bernoulli(0.5) ? "foo_" : "bar_") +
                             std::to_string(arity);
        int v = ast_.add(Kind::kCall, callee);
        for (int i = 0; i < arity; ++i) ast_.append(v, "args", number(depth + 1));
        return v;
      }
    }
  }

  int boolean(int depth) {
    std::vector<double> w = cfg_.boolean_weights;
    if (depth >= cfg_.max_expr_depth) w[0] = w[2] = 0;
    switch (pick(w)) {
      case 0: {
        static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
        int v = ast_.add(Kind::kCompare, ops[rng_.below(6)]);
        ast_.append(v, "left", number(depth + 1));
        ast_.append(v, "right", number(depth + 1));
        return v;
      }
      case 1:
        return ast_.add(Kind::kConstant, rng_.bernoulli(0.5) ? "True" : "False");
      default: {
        int v = ast_.add(Kind::kBoolOp, rng_.bernoulli(0.5) ? "and" : "or");
        ast_.append(v, "values", boolean(depth + 1));
        ast_.append(v, "values", boolean(depth + 1));
        return v;
      }
    }
  }

  void block(int owner, const char* field, int depth, bool in_loop,
             const std::vector<std::string>& bound = {}) {
    scopes_.emplace_back(bound);
    statement(owner, field, depth, in_loop);
    while (python_node_count(ast_) < cfg_.target_nodes &&
           rng_.bernoulli(cfg_.block_continue)) {
      statement(owner, field, depth, in_loop);
    }
    block_end(owner, field, in_loop);
    scopes_.pop_back();
  }

  void block_end(int owner, const char* field, bool in_loop) {
    std::vector<double> w = cfg_.block_end_weights;
    if (!in_loop) w[2] = w[3] = 0;
    switch (pick(w)) {
      case 0:
        return;
      case 1: {
        int r = ast_.add(Kind::kReturn);
        ast_.append(owner, field, r);
        if (rng_.bernoulli(0.5)) ast_.append(r, "value", number(1));
        return;
      }
      case 2:
        ast_.append(owner, field, ast_.add(Kind::kBreak));
        return;
      default:
        ast_.append(owner, field, ast_.add(Kind::kContinue));
        return;
    }
  }

  void statement(int owner, const char* field, int depth, bool in_loop) {
    std::vector<double> w = cfg_.statement_weights;
    if (depth >= cfg_.max_block_depth) w[2] = w[3] = w[4] = w[5] = 0;
    int choice = pick(w);
    switch (choice) {
      case 0: {
        int s = ast_.add(Kind::kAssign);
        ast_.append(owner, field, s);
        std::string target = fresh_or_existing();
        ast_.append(s, "target", ast_.add(Kind::kName, target));
        ast_.append(s, "value", number(1));
        define(target);
        return;
      }
      case 1: {
        int s = ast_.add(Kind::kExpr);
        ast_.append(owner, field, s);
        int call = ast_.add(Kind::kCall, "print");
        ast_.append(s, "value", call);
        ast_.append(call, "args", number(2));
        return;
      }
      case 2:
      case 3: {
        int s = ast_.add(Kind::kIf);
        ast_.append(owner, field, s);
        ast_.append(s, "test", boolean(1));
        block(s, "body", depth + 1, in_loop);
        if (choice == 3) block(s, "orelse", depth + 1, in_loop);
        return;
      }
      case 4: {
        int s = ast_.add(Kind::kFor);
        ast_.append(owner, field, s);
        std::string target = fresh_or_existing();
        ast_.append(s, "target", ast_.add(Kind::kName, target));
        int range = ast_.add(Kind::kCall, "range");
        ast_.append(s, "iter", range);
        int to_int = ast_.add(Kind::kCall, "int");
        ast_.append(range, "args", to_int);
        ast_.append(to_int, "args", number(3));
        block(s, "body", depth + 1, true, {target});
        return;
      }
      case 5: {
        int s = ast_.add(Kind::kWhile);
        ast_.append(owner, field, s);
        ast_.append(s, "test", boolean(1));
        block(s, "body", depth + 1, true);
        return;
      }
      default:
        ast_.append(owner, field, ast_.add(Kind::kPass));
        return;
    }
  }

  SeededRng& rng_;
  const PcfgConfig& cfg_;
  ProgramAst ast_;
  std::vector<std::vector<std::string>> scopes_;
  int next_var_ = 0;
};

}  // namespace

void PcfgConfig::validate() const {
  check_weights(number_weights, 4, "number");
  check_weights(boolean_weights, 3, "boolean");
  check_weights(statement_weights, 7, "statement");
  check_weights(block_end_weights, 4, "block end");
  if (target_nodes <= 0) throw Error("pcfg: target_nodes must be positive");
  if (max_expr_depth < 1) throw Error("pcfg: max_expr_depth must be at least 1");
  if (max_block_depth < 0) throw Error("pcfg: max_block_depth must be >= 0");
  if (!(block_continue >= 0 && block_continue < 1)) {
    throw Error("pcfg: block_continue must lie in [0, 1)");
  }
  if (!(new_variable >= 0 && new_variable <= 1)) {
    throw Error("pcfg: new_variable must lie in [0, 1]");
  }
  if (num_params < 0 || num_params > 26) throw Error("pcfg: bad num_params");
  if (max_rejections < 1) throw Error("pcfg: max_rejections must be positive");
}

PcfgConfig PcfgConfig::preset(const std::string& name) {
  PcfgConfig c;
  c.name = name;
  if (name == "1x") {
    c.target_nodes = 150;
    c.max_graph_nodes = 256;
    c.max_tuples = 512;
  } else if (name == "2x") {
    c.target_nodes = 300;
    c.max_graph_nodes = 512;
    c.max_tuples = 1024;
  } else if (name == "0.5x") {
    c.target_nodes = 75;
    c.max_graph_nodes = 128;
    c.max_tuples = 512;
  } else {
    throw Error("unknown size preset '" + name + "'");
  }
  return c;
}

PcfgConfig PcfgConfig::from_config(const Config& cfg) {
  PcfgConfig c = preset(cfg.get_string("pcfg.size", "1x"));
  c.number_weights = cfg.get_doubles("pcfg.number_weights", c.number_weights);
  c.boolean_weights = cfg.get_doubles("pcfg.boolean_weights", c.boolean_weights);
  c.statement_weights = cfg.get_doubles("pcfg.statement_weights", c.statement_weights);
  c.block_end_weights = cfg.get_doubles("pcfg.block_end_weights", c.block_end_weights);
  c.block_continue = cfg.get_double("pcfg.block_continue", c.block_continue);
  c.new_variable = cfg.get_double("pcfg.new_variable", c.new_variable);
  c.max_expr_depth = static_cast<int>(cfg.get_int("pcfg.max_expr_depth", c.max_expr_depth));
  c.max_block_depth = static_cast<int>(cfg.get_int("pcfg.max_block_depth", c.max_block_depth));
  c.num_params = static_cast<int>(cfg.get_int("pcfg.num_params", c.num_params));
  c.target_nodes = static_cast<int>(cfg.get_int("pcfg.target_nodes", c.target_nodes));
  c.max_graph_nodes = static_cast<int>(cfg.get_int("pcfg.max_graph_nodes", c.max_graph_nodes));
  c.max_tuples = static_cast<int>(cfg.get_int("pcfg.max_tuples", c.max_tuples));
  c.max_rejections = static_cast<int>(cfg.get_int("pcfg.max_rejections", c.max_rejections));
  c.validate();
  return c;
}

ProgramAst sample_program(SeededRng& rng, const PcfgConfig& config) {
  config.validate();
  Sampler s(rng, config);
  return s.run();
}

GeneratedProgram generate_program(SeededRng& rng, const PcfgConfig& config) {
  config.validate();
  for (int attempt = 0; attempt < config.max_rejections; ++attempt) {
    ProgramAst ast = sample_program(rng, config);
    EncodedProgram enc = ast_to_graph(ast);
    if (enc.graph.num_nodes() > config.max_graph_nodes) continue;
    int tuples = encode_program(enc).num_states();
    if (tuples > config.max_tuples) continue;
    GeneratedProgram out;
    out.ast = std::move(ast);
    out.graph_nodes = enc.graph.num_nodes();
    out.tuples = tuples;
    out.rejected = attempt;
    return out;
  }
  throw Error("generate_program: " + std::to_string(config.max_rejections) +
              " consecutive draws exceeded the size cutoffs for preset '" +
              config.name + "'");
}

}  // namespace gfsa::python
