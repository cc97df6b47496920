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

// Command-line entry point: data generation, training, evaluation, export
// and the built-in self checks. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfsa/config.hpp"
#include "gfsa/export.hpp"
#include "gfsa/gfsa.hpp"
#include "gfsa/gridworld.hpp"
#include "gfsa/parallel.hpp"
#include "gfsa/python/dataset.hpp"
#include "gfsa/python/encoding.hpp"
#include "gfsa/selftest.hpp"
#include "gfsa/training.hpp"

#ifndef GFSA_VERSION
#define GFSA_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
namespace grid = gfsa::grid;
namespace python = gfsa::python;

namespace {

struct UsageError : gfsa::Error {
  using gfsa::Error::Error;
};

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

// Options shared by the commands that read a config and write a directory.
struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool needs_out = true) {
  cmd->add_option("--config", o.config_path, "Config file (TOML-style key = value)");
  cmd->add_option("--set", o.overrides, "Override a config key: section.key=value");
  cmd->add_option("--seed", o.seed, "Seed (overrides GFSA_SEED and the config)");
  auto* out = cmd->add_option("--out", o.out, "Output directory");
  if (needs_out) out->required();
}

gfsa::Config load_config(const RunOptions& o) {
  gfsa::Config cfg;
  try {
    if (!o.config_path.empty()) {
      require_file(o.config_path, "config");
      cfg = gfsa::Config::load(o.config_path);
    }
    for (const std::string& s : o.overrides) cfg.apply_override(s);
  } catch (const UsageError&) {
    throw;
  } catch (const gfsa::Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

// Command-line seed, else GFSA_SEED, else the config key (default 0). The
// result is written back under `key`.
std::uint64_t resolve_seed(const RunOptions& o, gfsa::Config& cfg, const std::string& key) {
  std::uint64_t seed = 0;
  if (o.seed) {
    seed = *o.seed;
  } else if (const char* env = std::getenv("GFSA_SEED"); env && *env) {
    char* end = nullptr;
    seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError(std::string("GFSA_SEED is not an integer: ") + env);
  } else {
    try {
      seed = static_cast<std::uint64_t>(cfg.get_int(key, 0));
    } catch (const gfsa::Error& e) {
      throw UsageError(e.what());
    }
  }
  cfg.set(key, std::to_string(seed));
  return seed;
}

// One manifest per output directory, written before any other output and
// completed when the command finishes.
class RunManifest {
 public:
  RunManifest(const std::string& command, const RunOptions& o, const gfsa::Config& cfg,
              std::uint64_t seed) {
    dir_ = o.out;
    fs::create_directories(dir_);
    data_ = {{"command", command},
             {"config_path", o.config_path},
             {"config_file_hash",
              o.config_path.empty() ? "" : gfsa::hex64(gfsa::fnv1a64(read_file(o.config_path)))},
             {"config_hash", gfsa::hex64(cfg.hash())},
             {"config", cfg.values()},
             {"overrides", o.overrides},
             {"seed", seed},
             {"code_version", GFSA_VERSION},
             {"output_dir", fs::absolute(dir_).string()},
             {"started_at", utc_now()},
             {"status", "running"},
             {"outputs", json::array()}};
    write();
  }
  void add_output(const std::string& name) { data_["outputs"].push_back(name); }
  void set(const std::string& key, json value) { data_[key] = std::move(value); }
  void finish(const std::string& status) {
    data_["status"] = status;
    data_["finished_at"] = utc_now();
    write();
  }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

 private:
  void write() const {
    std::ofstream out(fs::path(dir_) / "manifest.json");
    if (!out) throw gfsa::Error("cannot write manifest in " + dir_);
    out << data_.dump(2) << '\n';
  }
  std::string dir_;
  json data_;
};

// Runs `body` with the manifest marked failed if it throws.
template <typename Fn>
int with_manifest(RunManifest& m, Fn body) {
  try {
    body();
  } catch (...) {
    m.finish("failed");
    throw;
  }
  m.finish("ok");
  return 0;
}

python::EdgeKind parse_kind(const std::string& task) {
  if (task == "ncf") return python::EdgeKind::kNextControlFlow;
  if (task == "lastread") return python::EdgeKind::kLastRead;
  if (task == "lastwrite") return python::EdgeKind::kLastWrite;
  throw UsageError("unknown edge task '" + task + "' (ncf, lastread, lastwrite)");
}

std::string kind_task(python::EdgeKind k) {
  switch (k) {
    case python::EdgeKind::kNextControlFlow: return "ncf";
    case python::EdgeKind::kLastRead: return "lastread";
    case python::EdgeKind::kLastWrite: return "lastwrite";
  }
  return "?";
}

// ---- gen-programs ---------------------------------------------------------

struct GenProgramsOptions {
  RunOptions run;
  std::string preset;
  std::optional<int> count;
};

int cmd_gen_programs(const GenProgramsOptions& o, int workers) {
  gfsa::Config cfg = load_config(o.run);
  if (!o.preset.empty()) cfg.set("pcfg.size", "\"" + o.preset + "\"");
  std::uint64_t seed = resolve_seed(o.run, cfg, "data.seed");
  python::PcfgConfig pcfg;
  int count = 0;
  try {
    pcfg = python::PcfgConfig::from_config(cfg);
    count = o.count ? *o.count : static_cast<int>(cfg.get_int("data.count", 100));
  } catch (const gfsa::Error& e) {
    throw UsageError(e.what());
  }
  if (count < 1) throw UsageError("count must be positive");
  RunManifest m("gen-programs", o.run, cfg, seed);
  return with_manifest(m, [&] {
    auto data = python::generate_dataset(pcfg, seed, count, workers);
    python::write_dataset(m.path("programs.jsonl"), data);
    m.add_output("programs.jsonl");
    m.set("count", count);
    m.set("preset", pcfg.name);
    std::cout << "wrote " << data.size() << " programs (" << pcfg.name << ") to "
              << m.path("programs.jsonl") << "\n";
  });
}

// ---- gen-mazes ------------------------------------------------------------

struct GenMazesOptions {
  RunOptions run;
  std::optional<int> count;
};

int cmd_gen_mazes(const GenMazesOptions& o) {
  gfsa::Config cfg = load_config(o.run);
  std::uint64_t seed = resolve_seed(o.run, cfg, "maze.seed");
  grid::MazeConfig mc;
  int count = 0;
  try {
    mc = grid::MazeConfig::from_config(cfg);
    count = o.count ? *o.count : static_cast<int>(cfg.get_int("maze.count", 16));
  } catch (const gfsa::Error& e) {
    throw UsageError(e.what());
  }
  if (count < 1) throw UsageError("count must be positive");
  RunManifest m("gen-mazes", o.run, cfg, seed);
  return with_manifest(m, [&] {
    gfsa::SeededRng root(seed);
    std::vector<grid::GridMaze> mazes;
    for (int i = 0; i < count; ++i) {
      gfsa::SeededRng rng = root.split(i);
      mazes.push_back(grid::generate_maze(rng, mc));
    }
    grid::write_mazes(m.path("mazes.txt"), mazes);
    m.add_output("mazes.txt");
    m.set("count", count);
    std::cout << "wrote " << count << " mazes to " << m.path("mazes.txt") << "\n";
  });
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  RunOptions run;
  std::string task;
  std::string train_path;
  std::string val_path;
};

int cmd_train_edges(const TrainOptions& o, int workers) {
  bool rl = o.task == "rl-ablation";
  gfsa::Config cfg = load_config(o.run);
  std::uint64_t seed = resolve_seed(o.run, cfg, "train.seed");
  cfg.set("train.workers", std::to_string(workers));
  gfsa::TrainConfig tc;
  python::EdgeKind kind;
  std::string train_path = o.train_path, val_path = o.val_path;
  try {
    tc = gfsa::TrainConfig::from_config(cfg);
    kind = parse_kind(rl ? cfg.get_string("train.kind", "ncf") : o.task);
    if (train_path.empty()) train_path = cfg.get_string("data.train", "");
    if (val_path.empty()) val_path = cfg.get_string("data.val", "");
  } catch (const UsageError&) {
    throw;
  } catch (const gfsa::Error& e) {
    throw UsageError(e.what());
  }
  require_file(train_path, "training dataset");
  require_file(val_path, "validation dataset");
  RunManifest m("train " + o.task, o.run, cfg, seed);
  m.set("train_data", train_path);
  m.set("val_data", val_path);
  return with_manifest(m, [&] {
    auto train = python::read_dataset(train_path);
    auto val = python::read_dataset(val_path);
    auto on_log = [](const gfsa::LogRow& r) {
      std::printf("step %6d  loss %-12.6g val_f1 %-8.4f %.1fs\n", r.step, r.loss, r.val_f1,
                  r.wallclock);
      std::fflush(stdout);
    };
    gfsa::TrainResult result = rl ? gfsa::reinforce_ablation(train, val, kind, tc, on_log)
                                   : gfsa::train_edge_classifier(train, val, kind, tc, on_log);
    gfsa::write_log_csv(m.path("log.csv"), result.log);
    m.add_output("log.csv");
    gfsa::Checkpoint ckpt;
    gfsa::ParamLayout layout = gfsa::python_layout(tc.num_memory);
    ckpt.schema_hash = layout.schema_hash();
    ckpt.tables = {result.params};
    ckpt.meta = {{"task", kind_task(kind)},
                 {"mode", rl ? "reinforce" : "focal"},
                 {"best_step", result.best_step},
                 {"best_val_f1", result.best_val_f1},
                 {"steps_run", result.steps_run}};
    if (rl) {
      double reward = gfsa::dataset_reward(val, kind, layout, result.params, workers);
      ckpt.meta["val_reward"] = reward;
      std::printf("validation expected reward %.4f\n", reward);
    }
    gfsa::save_checkpoint(m.path("checkpoint.json"), ckpt);
    m.add_output("checkpoint.json");
    m.set("result", ckpt.meta);
    std::printf("best val_f1 %.4f at step %d\n", result.best_val_f1, result.best_step);
  });
}

int cmd_train_grid(const TrainOptions& o, int workers) {
  gfsa::Config cfg = load_config(o.run);
  std::uint64_t seed = resolve_seed(o.run, cfg, "gridworld.seed");
  cfg.set("gridworld.workers", std::to_string(workers));
  grid::GridTrainConfig gc;
  try {
    gc = grid::GridTrainConfig::from_config(cfg);
  } catch (const gfsa::Error& e) {
    throw UsageError(e.what());
  }
  RunManifest m("train gridworld", o.run, cfg, seed);
  return with_manifest(m, [&] {
    auto result = grid::train_gridworld(gc, [](const grid::GridLogRow& r) {
      std::printf("step %6d  loss %-12.6g val_steps %-8.3f %.1fs\n", r.step, r.loss,
                  r.val_steps, r.wallclock);
      std::fflush(stdout);
    });
    grid::write_grid_log_csv(m.path("log.csv"), result.log);
    m.add_output("log.csv");
    gfsa::Checkpoint ckpt;
    ckpt.schema_hash = grid::grid_layout(gc.num_memory).schema_hash();
    ckpt.tables = result.options;
    ckpt.meta = {{"task", "gridworld"},
                 {"initial_val_steps", result.initial_val_steps},
                 {"best_val_steps", result.best_val_steps},
                 {"best_step", result.best_step}};
    gfsa::save_checkpoint(m.path("checkpoint.json"), ckpt);
    m.add_output("checkpoint.json");
    m.set("result", ckpt.meta);
    std::printf("val expected steps %.3f -> %.3f (best at step %d)\n",
                result.initial_val_steps, result.best_val_steps, result.best_step);
  });
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  RunOptions run;
  std::string checkpoint;
  std::string task;
  std::vector<std::string> data;  // name=path
  int folds = 10;
  int table = 0;
};

int cmd_eval(const EvalOptions& o, int workers) {
  require_file(o.checkpoint, "checkpoint");
  if (o.data.empty()) throw UsageError("at least one --data name=path is required");
  std::vector<std::pair<std::string, std::string>> splits;
  for (const std::string& d : o.data) {
    auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--data expects name=path, got '" + d + "'");
    }
    splits.emplace_back(d.substr(0, eq), d.substr(eq + 1));
    require_file(splits.back().second, "dataset");
  }
  gfsa::Config cfg = load_config(o.run);
  gfsa::Checkpoint ckpt = gfsa::load_checkpoint(o.checkpoint);
  std::string task = o.task;
  if (task.empty()) task = ckpt.meta.value("task", "");
  python::EdgeKind kind = parse_kind(task);
  if (o.table < 0 || o.table >= static_cast<int>(ckpt.tables.size())) {
    throw UsageError("checkpoint has no table " + std::to_string(o.table));
  }
  const gfsa::AutomatonParams& params = ckpt.tables[o.table];
  gfsa::ParamLayout layout = gfsa::python_layout(params.num_memory);
  if (ckpt.schema_hash != layout.schema_hash()) {
    throw gfsa::Error("checkpoint schema " + gfsa::hex64(ckpt.schema_hash) +
                      " does not match the program schema " +
                      gfsa::hex64(layout.schema_hash()));
  }
  params.validate(layout);
  RunManifest m("eval", o.run, cfg, 0);
  m.set("checkpoint", o.checkpoint);
  return with_manifest(m, [&] {
    json report = {{"task", task}, {"checkpoint", o.checkpoint}, {"folds", o.folds},
                   {"splits", json::array()}};
    for (const auto& [name, path] : splits) {
      auto data = python::read_dataset(path);
      auto scored = gfsa::score_dataset(data, kind, layout, params, workers);
      gfsa::SplitReport r = gfsa::f1_best_threshold(scored, o.folds, name);
      report["splits"].push_back(r.to_json());
      std::printf("%-6s F1 %.4f +- %.4f  (threshold %.6g, P %.4f, R %.4f)%s%s\n", name.c_str(),
                  r.f1_mean, r.f1_stderr, r.threshold, r.pooled.precision(),
                  r.pooled.recall(), r.warning.empty() ? "" : "  warning: ",
                  r.warning.c_str());
    }
    std::ofstream(m.path("report.json")) << report.dump(2) << '\n';
    m.add_output("report.json");
  });
}

// ---- export ---------------------------------------------------------------

struct ExportOptions {
  RunOptions run;
  std::string checkpoint;
  std::string format;
  std::string graph;    // generic graph JSON
  std::string program;  // program dataset (JSONL)
  std::string maze;     // maze file
  int index = 0;
  int table = 0;
  double threshold = 0.01;
};

int cmd_export(const ExportOptions& o) {
  if (o.format != "dot" && o.format != "csv" && o.format != "json") {
    throw UsageError("unknown export format '" + o.format + "' (dot, csv, json)");
  }
  require_file(o.checkpoint, "checkpoint");
  int inputs = !o.graph.empty() + !o.program.empty() + !o.maze.empty();
  if (inputs > 1) throw UsageError("pass at most one of --graph, --program, --maze");
  if (o.format == "csv" && inputs == 0) {
    throw UsageError("csv export needs an input graph (--graph, --program or --maze)");
  }
  if (!o.graph.empty()) require_file(o.graph, "graph");
  if (!o.program.empty()) require_file(o.program, "program dataset");
  if (!o.maze.empty()) require_file(o.maze, "maze file");

  gfsa::Checkpoint ckpt = gfsa::load_checkpoint(o.checkpoint);
  if (o.table < 0 || o.table >= static_cast<int>(ckpt.tables.size())) {
    throw UsageError("checkpoint has no table " + std::to_string(o.table));
  }
  const gfsa::AutomatonParams& params = ckpt.tables[o.table];

  // Pick the schema the checkpoint was trained on.
  gfsa::GraphSchema schema;
  std::optional<gfsa::GenericGraph> generic;
  if (!o.graph.empty()) {
    generic = gfsa::generic_graph_from_json(json::parse(read_file(o.graph)));
    schema = generic->schema;
  } else if (ckpt.schema_hash == python::python_schema().hash()) {
    schema = python::python_schema();
  } else if (ckpt.schema_hash == grid::grid_schema().hash()) {
    schema = grid::grid_schema();
  } else {
    throw gfsa::Error("checkpoint schema " + gfsa::hex64(ckpt.schema_hash) +
                      " is not a built-in schema; pass the graph with --graph");
  }
  gfsa::ParamLayout layout(schema, params.num_memory);
  if (layout.schema_hash() != ckpt.schema_hash) {
    throw gfsa::Error("checkpoint schema " + gfsa::hex64(ckpt.schema_hash) +
                      " does not match the input graph's schema " +
                      gfsa::hex64(layout.schema_hash()));
  }
  params.validate(layout);
  gfsa::Config cfg = load_config(o.run);
  RunManifest m("export " + o.format, o.run, cfg, 0);
  m.set("checkpoint", o.checkpoint);
  return with_manifest(m, [&] {
    gfsa::Policy policy = gfsa::normalize_policy(layout, params);
    if (o.format == "dot") {
      std::ofstream(m.path("policy.dot")) << gfsa::policy_dot(schema, layout, policy, params.z0,
                                                              o.threshold);
      m.add_output("policy.dot");
    } else if (o.format == "json") {
      std::ofstream(m.path("policy.json"))
          << gfsa::policy_json(schema, layout, params, policy, o.threshold).dump(2) << '\n';
      m.add_output("policy.json");
    }
    if (inputs == 0) return;

    // Adjacency of one input graph.
    gfsa::PomdpInstance inst;
    std::optional<grid::GridGraph> grid_graph;
    if (generic) {
      inst = gfsa::encode_graph(generic->graph, generic->schema);
    } else if (!o.program.empty()) {
      auto data = python::read_dataset(o.program);
      if (o.index < 0 || o.index >= static_cast<int>(data.size())) {
        throw UsageError("--index out of range for " + o.program);
      }
      inst = python::encode_program(data[o.index].encoded);
    } else {
      auto mazes = grid::read_mazes(o.maze);
      if (o.index < 0 || o.index >= static_cast<int>(mazes.size())) {
        throw UsageError("--index out of range for " + o.maze);
      }
      grid_graph = grid::grid_to_graph(mazes[o.index]);
      inst = grid::encode_grid(*grid_graph);
    }
    if (grid_graph) {
      // Options act through their raw AddEdge mass.
      grid::GridTask task{*grid_graph, inst, {}};
      auto adjs = grid::option_adjacencies(task, layout, ckpt.tables);
      if (o.format == "csv") {
        std::ofstream(m.path("adjacency.csv")) << gfsa::matrix_csv(adjs[o.table]);
        m.add_output("adjacency.csv");
      } else if (o.format == "dot") {
        std::ofstream(m.path("options.dot")) << grid::options_dot(*grid_graph, adjs, 0.05);
        m.add_output("options.dot");
      }
      return;
    }
    if (o.format == "csv") {
      auto dist = gfsa::solve_absorbing(inst, layout, policy, params.z0, params.t_max);
      std::ofstream(m.path("adjacency.csv"))
          << gfsa::matrix_csv(gfsa::derived_adjacency(dist, params).a);
      m.add_output("adjacency.csv");
    }
  });
}

// ---- selftest -------------------------------------------------------------

int cmd_selftest(std::uint64_t seed, int compile_trials, int grad_trials) {
  std::vector<gfsa::CheckResult> results{gfsa::check_compilation(compile_trials, seed),
                                         gfsa::check_gradients(grad_trials, seed + 1)};
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%s %-10s value %.3g (limit %.3g) %s\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.value, r.limit, r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph finite-state automaton layer: data, training and evaluation"};
  app.require_subcommand(1);
  int workers = gfsa::default_workers();
  app.add_option("--workers", workers, "Worker threads for per-graph work")
      ->check(CLI::PositiveNumber);

  GenProgramsOptions gp;
  auto* gen_programs = app.add_subcommand("gen-programs", "Generate a program dataset");
  add_run_options(gen_programs, gp.run);
  gen_programs->add_option("--preset", gp.preset, "Size preset: 1x, 2x or 0.5x");
  gen_programs->add_option("--count", gp.count, "Number of programs");

  GenMazesOptions gm;
  auto* gen_mazes = app.add_subcommand("gen-mazes", "Generate grid-world mazes");
  add_run_options(gen_mazes, gm.run);
  gen_mazes->add_option("--count", gm.count, "Number of mazes");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("task", tr.task, "ncf, lastread, lastwrite, gridworld or rl-ablation")
      ->required()
      ->check(CLI::IsMember({"ncf", "lastread", "lastwrite", "gridworld", "rl-ablation"}));
  add_run_options(train, tr.run);
  train->add_option("--train", tr.train_path, "Training dataset (JSONL)");
  train->add_option("--val", tr.val_path, "Validation dataset (JSONL)");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with the F1 protocol");
  add_run_options(eval, ev.run);
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval->add_option("--task", ev.task, "Edge task (default: from the checkpoint)");
  eval->add_option("--data", ev.data, "Split as name=path, repeatable")->required();
  eval->add_option("--folds", ev.folds, "Folds; the first tunes the threshold")
      ->check(CLI::Range(2, 1000));
  eval->add_option("--table", ev.table, "Parameter table index");

  ExportOptions ex;
  auto* exp = app.add_subcommand("export", "Export a checkpoint as DOT, CSV or JSON");
  add_run_options(exp, ex.run);
  exp->add_option("--checkpoint", ex.checkpoint, "Checkpoint file")->required();
  exp->add_option("--format", ex.format, "dot, csv or json")->required();
  exp->add_option("--graph", ex.graph, "Generic graph JSON");
  exp->add_option("--program", ex.program, "Program dataset (JSONL)");
  exp->add_option("--maze", ex.maze, "Maze file");
  exp->add_option("--index", ex.index, "Record index in --program or --maze");
  exp->add_option("--table", ex.table, "Parameter table index");
  exp->add_option("--threshold", ex.threshold, "Smallest probability shown");

  std::uint64_t st_seed = 1;
  int compile_trials = 100, grad_trials = 20;
  auto* selftest = app.add_subcommand("selftest", "Run the automaton-compilation and gradient checks");
  selftest->add_option("--seed", st_seed, "Seed");
  selftest->add_option("--compile-trials", compile_trials, "Random (graph, DFA) pairs");
  selftest->add_option("--grad-trials", grad_trials, "Random gradient instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_programs) return cmd_gen_programs(gp, workers);
    if (*gen_mazes) return cmd_gen_mazes(gm);
    if (*train) {
      return tr.task == "gridworld" ? cmd_train_grid(tr, workers) : cmd_train_edges(tr, workers);
    }
    if (*eval) return cmd_eval(ev, workers);
    if (*exp) return cmd_export(ex);
    if (*selftest) return cmd_selftest(st_seed, compile_trials, grad_trials);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
