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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "doctest.h"
#include "gfsa/config.hpp"
#include "gfsa/export.hpp"
#include "gfsa/gridworld.hpp"
#include "gfsa/python/dataset.hpp"
#include "gfsa/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gfsa;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with `args` and returns its exit code. Output goes to a log
// file inside `dir`.
int run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const char* cli = std::getenv("GFSA_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "GFSA_CLI is not set");
  fs::create_directories(dir);
  std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + cli + "' --workers 1 " +
                    args + " > cli.log 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gfsa_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path source_dir() {
  const char* s = std::getenv("GFSA_SOURCE_DIR");
  REQUIRE_MESSAGE(s != nullptr, "GFSA_SOURCE_DIR is not set");
  return s;
}

// (from, to, label) triples of a DOT file written by policy_dot.
std::set<std::tuple<int, int, std::string>> dot_edges(const std::string& dot) {
  std::set<std::tuple<int, int, std::string>> out;
  std::regex edge(R"re(z(\d+) -> z(\d+) \[label="([^"]*) \([0-9.]+\)"\])re");
  for (std::sregex_iterator it(dot.begin(), dot.end(), edge), end; it != end; ++it) {
    out.emplace(std::stoi((*it)[1]), std::stoi((*it)[2]), (*it)[3]);
  }
  return out;
}

}  // namespace

TEST_CASE("config reader") {
  Config c = Config::parse(R"(# top comment
top = 3
[train]
lr = 0.5   # trailing comment
name = "a # b"
flag = true
weights = [0.25, 0.75]
[maze]
width=9
)");
  CHECK(c.get_int("top") == 3);
  CHECK(c.get_double("train.lr") == 0.5);
  CHECK(c.get_string("train.name") == "a # b");
  CHECK(c.get_bool("train.flag", false));
  CHECK(c.get_doubles("train.weights", {}) == std::vector<double>{0.25, 0.75});
  CHECK(c.get_int("maze.width") == 9);
  CHECK(c.get_int("maze.height", 11) == 11);
  CHECK_THROWS_AS(c.get_int("train.lr"), Error);
  CHECK_THROWS_AS(c.get_bool("maze.width", false), Error);
  CHECK_THROWS_WITH_AS(c.get_double("train.missing"), doctest::Contains("missing key"), Error);
  CHECK_THROWS_AS(Config::parse("[train\n"), Error);
  CHECK_THROWS_WITH_AS(Config::parse("a = 1\njunk\n", "x.toml"), doctest::Contains("x.toml:2"),
                       Error);
  c.apply_override("train.lr=0.25");
  CHECK(c.get_double("train.lr") == 0.25);
  CHECK_THROWS_AS(c.apply_override("nonsense"), Error);
  // The hash depends on content, not on the order keys were written.
  CHECK(Config::parse("a = 1\nb = 2\n").hash() == Config::parse("b = 2\na = 1\n").hash());
  CHECK(Config::parse("a = 1\n").hash() != Config::parse("a = 2\n").hash());
}

TEST_CASE("shipped configs load") {
  fs::path dir = source_dir() / "configs";
  for (const char* name : {"pcfg_1x.toml", "pcfg_2x.toml", "pcfg_0.5x.toml"}) {
    auto p = python::PcfgConfig::from_config(Config::load((dir / name).string()));
    CHECK(p.name == std::string(name).substr(5, std::string(name).size() - 10));
  }
  CHECK(python::PcfgConfig::from_config(Config::load((dir / "pcfg_2x.toml").string()))
            .target_nodes == 300);
  CHECK(python::PcfgConfig::from_config(Config::load((dir / "pcfg_0.5x.toml").string()))
            .max_graph_nodes == 128);
  for (const char* name : {"train_ncf.toml", "train_lastread.toml", "train_lastwrite.toml",
                           "train_rl.toml"}) {
    TrainConfig t = TrainConfig::from_config(Config::load((dir / name).string()));
    CHECK(t.num_memory == 4);
  }
  auto g = grid::GridTrainConfig::from_config(Config::load((dir / "gridworld.toml").string()));
  CHECK(g.maze.width == 9);
  CHECK(g.num_options == 4);
  CHECK(g.num_memory == 2);
}

TEST_CASE("DOT export of a DFA-compiled policy has the DFA's transitions") {
  SeededRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = oracle::random_generic_graph(rng, 4, 2, 2);
    auto dfa = oracle::random_dfa(rng, g.schema, 3);
    CompiledPolicy c = dfa_to_policy(dfa, g.schema);
    std::string dot = policy_dot(g.schema, c.layout, c.policy, c.z0, 0.01);
    auto edges = dot_edges(dot);
    // Expected movement edges: at a live state q reading node type t, every
    // movement m leads to delta(delta(q, t), m); accepting halves add an
    // edge and move to the half state.
    Dfa full = dfa;
    full.complete();
    std::set<std::tuple<int, int, std::string>> expect;
    for (std::size_t t = 0; t < g.schema.node_types.size(); ++t) {
      const auto& type = g.schema.node_types[t];
      for (int q = 0; q < full.num_states; ++q) {
        int half = full.step(q, full.symbol_index(type.name));
        bool live = q != c.sink && half != c.sink;
        if (!live) {
          expect.emplace(q, q, type.name + "/TRUE: Stop");
        } else {
          if (full.accepting[half]) expect.emplace(q, half, type.name + "/TRUE: AddEdgeAndStop");
          for (const auto& m : type.movements) {
            expect.emplace(q, full.step(half, full.symbol_index(m)), type.name + "/TRUE: " + m);
          }
        }
        expect.emplace(q, q, type.name + "/FALSE: Stop");
      }
    }
    // Compiled states beyond the completed DFA are the added sink.
    std::set<std::tuple<int, int, std::string>> got;
    for (const auto& e : edges) {
      if (std::get<0>(e) < full.num_states) got.insert(e);
    }
    CHECK_MESSAGE(got == expect, "trial " << trial);
  }
}

TEST_CASE("an all-stop policy exports Stop-only transitions") {
  GraphSchema schema = build_generic_schema({"A", "B"}, {"e"});
  ParamLayout layout(schema, 2);
  AutomatonParams p;
  p.num_memory = 2;
  p.theta.assign(layout.size(), -1000.0);
  for (int type = 0; type < 2; ++type) {
    for (int obs = 0; obs < 2; ++obs) {
      for (int z = 0; z < 2; ++z) {
        p.theta[layout.entry(type, obs, 0, z, layout.halt_action(type, Halt::kStop), z)] = 0;
      }
    }
  }
  Policy pol = normalize_policy(layout, p);
  auto edges = dot_edges(policy_dot(schema, layout, pol, 0));
  CHECK(edges.size() == 8);
  for (const auto& [z, z2, label] : edges) {
    CHECK(label.ends_with(": Stop"));
    CHECK(z == z2);
  }
  auto j = policy_json(schema, layout, p, pol);
  CHECK(j["entries"].size() == 8);
  CHECK(matrix_csv(DenseMatrix(2, 2)) == "0,0\n0,0\n");
}

TEST_CASE("cli: gen-programs is reproducible and honors GFSA_SEED") {
  fs::path d = scratch("gen");
  std::string cfg = (source_dir() / "configs" / "pcfg_1x.toml").string();
  REQUIRE(run_cli("gen-programs --config '" + cfg + "' --count 10 --seed 1 --out a", d) == 0);
  REQUIRE(run_cli("gen-programs --config '" + cfg + "' --count 10 --seed 1 --out b", d) == 0);
  std::string a = slurp(d / "a" / "programs.jsonl");
  CHECK(std::count(a.begin(), a.end(), '\n') == 10);
  CHECK(a == slurp(d / "b" / "programs.jsonl"));
  auto records = python::read_dataset((d / "a" / "programs.jsonl").string());
  CHECK(records.size() == 10);

  auto manifest = nlohmann::json::parse(slurp(d / "a" / "manifest.json"));
  CHECK(manifest["command"] == "gen-programs");
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest.contains("started_at"));
  CHECK(manifest.contains("finished_at"));
  CHECK(manifest.contains("code_version"));
  CHECK(manifest["config_path"] == cfg);
  int manifests = 0;
  for (const auto& e : fs::directory_iterator(d / "a")) manifests += e.path().filename() == "manifest.json";
  CHECK(manifests == 1);

  REQUIRE(run_cli("gen-programs --config '" + cfg + "' --count 10 --out env7", d, "GFSA_SEED=7") == 0);
  REQUIRE(run_cli("gen-programs --config '" + cfg + "' --count 10 --out env7b", d, "GFSA_SEED=7") == 0);
  CHECK(nlohmann::json::parse(slurp(d / "env7" / "manifest.json"))["seed"] == 7);
  CHECK(slurp(d / "env7" / "programs.jsonl") == slurp(d / "env7b" / "programs.jsonl"));
  CHECK(slurp(d / "env7" / "programs.jsonl") != a);

  REQUIRE(run_cli("gen-programs --preset 0.5x --count 3 --seed 2 --out half", d) == 0);
  CHECK(nlohmann::json::parse(slurp(d / "half" / "manifest.json"))["preset"] == "0.5x");
}

TEST_CASE("cli: usage and configuration errors exit with 2") {
  fs::path d = scratch("errors");
  CHECK(run_cli("", d) == 2);
  CHECK(run_cli("train ncf --train missing.jsonl --val missing.jsonl --out x", d) == 2);
  CHECK(run_cli("train nonsense --out x", d) == 2);
  CHECK(run_cli("gen-programs --config nowhere.toml --out x", d) == 2);
  CHECK(run_cli("gen-programs --preset 3x --out x", d) == 2);
  CHECK(run_cli("gen-programs --set pcfg.target_nodes=abc --out x", d) == 2);
  CHECK(run_cli("gen-programs --count 2 --out x", d, "GFSA_SEED=abc") == 2);
  CHECK(run_cli("export --checkpoint nothing.json --format dot --out x", d) == 2);
  std::ofstream(d / "broken.json") << "not a checkpoint\n";
  CHECK(run_cli("eval --checkpoint broken.json --task ncf --data 1x=broken.json --out x", d) == 1);
}

TEST_CASE("cli: train, eval and export on a small program set") {
  fs::path d = scratch("train");
  std::string cfg = (source_dir() / "configs" / "train_ncf.toml").string();
  REQUIRE(run_cli("gen-programs --preset 0.5x --count 12 --seed 3 --out tr", d) == 0);
  REQUIRE(run_cli("gen-programs --preset 0.5x --count 10 --seed 4 --out va", d) == 0);
  std::string train = "train ncf --config '" + cfg +
                      "' --set train.max_steps=4 --set train.eval_every=2 "
                      "--train tr/programs.jsonl --val va/programs.jsonl --out run";
  REQUIRE(run_cli(train, d) == 0);
  std::string log = slurp(d / "run" / "log.csv");
  CHECK(log.rfind("step,loss,val_f1,wallclock\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);
  auto ckpt = load_checkpoint((d / "run" / "checkpoint.json").string());
  CHECK(ckpt.tables.size() == 1);
  CHECK(ckpt.meta["task"] == "ncf");

  // Same config and seed, same parameters.
  REQUIRE(run_cli(train + "2", d) == 0);
  CHECK(load_checkpoint((d / "run2" / "checkpoint.json").string()).tables[0].theta ==
        ckpt.tables[0].theta);

  REQUIRE(run_cli("eval --checkpoint run/checkpoint.json --data small=va/programs.jsonl "
                  "--data again=tr/programs.jsonl --out ev",
                  d) == 0);
  auto report = nlohmann::json::parse(slurp(d / "ev" / "report.json"));
  CHECK(report["splits"].size() == 2);
  CHECK(report["splits"][0]["name"] == "small");
  CHECK(report["splits"][0]["fold_f1"].size() == 9);

  REQUIRE(run_cli("export --checkpoint run/checkpoint.json --format dot --out dot", d) == 0);
  CHECK(slurp(d / "dot" / "policy.dot").rfind("digraph policy", 0) == 0);
  REQUIRE(run_cli("export --checkpoint run/checkpoint.json --format csv "
                  "--program va/programs.jsonl --index 1 --out csv",
                  d) == 0);
  std::istringstream csv(slurp(d / "csv" / "adjacency.csv"));
  std::string row;
  int rows = 0;
  while (std::getline(csv, row)) {
    double total = 0;
    std::stringstream cells(row);
    std::string cell;
    while (std::getline(cells, cell, ',')) total += std::stod(cell);
    CHECK(total <= 1 + 1e-9);
    ++rows;
  }
  CHECK(rows > 0);
  CHECK(run_cli("export --checkpoint run/checkpoint.json --format svg --out bad", d) == 2);
  CHECK(run_cli("export --checkpoint run/checkpoint.json --format csv --out bad", d) == 2);

  // A grid-world checkpoint does not fit the program schema.
  REQUIRE(run_cli("train gridworld --set gridworld.max_steps=2 --set gridworld.eval_every=1 "
                  "--set gridworld.train_mazes=2 --set gridworld.val_mazes=1 "
                  "--set gridworld.goals_per_maze=2 --set gridworld.batch_size=1 "
                  "--set gridworld.num_options=1 --out grid",
                  d) == 0);
  std::string glog = slurp(d / "grid" / "log.csv");
  CHECK(glog.rfind("step,loss,val_steps,wallclock\n", 0) == 0);
  CHECK(std::count(glog.begin(), glog.end(), '\n') == 4);
  CHECK(run_cli("eval --checkpoint grid/checkpoint.json --task ncf --data a=va/programs.jsonl "
                "--out bad",
                d) == 1);
  REQUIRE(run_cli("gen-mazes --count 2 --seed 5 --out mz", d) == 0);
  REQUIRE(run_cli("export --checkpoint grid/checkpoint.json --format dot --maze mz/mazes.txt "
                  "--out gdot",
                  d) == 0);
  CHECK(fs::exists(d / "gdot" / "options.dot"));
  CHECK(fs::exists(d / "gdot" / "policy.dot"));
}

TEST_CASE("cli: selftest passes") {
  fs::path d = scratch("self");
  CHECK(run_cli("selftest --compile-trials 20 --grad-trials 4", d) == 0);
  std::string out = slurp(d / "cli.log");
  CHECK(out.find("PASS compilation") != std::string::npos);
  CHECK(out.find("PASS gradients") != std::string::npos);
}
