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

#ifndef GFSA_GRIDWORLD_HPP_
#define GFSA_GRIDWORLD_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gfsa/config.hpp"
#include "gfsa/gfsa.hpp"
#include "gfsa/pomdp.hpp"

namespace gfsa::grid {

struct GridMaze {
  int width = 0;
  int height = 0;
  std::vector<char> open;  // row-major, 1 for floor

  bool is_open(int row, int col) const {
    return row >= 0 && col >= 0 && row < height && col < width &&
           open[static_cast<std::size_t>(row) * width + col];
  }
  int num_open() const;
  // Open neighbors in the order left, up, right, down.
  std::array<bool, 4> neighbors(int row, int col) const;
  // Throws unless every floor cell has at least two floor neighbors and the
  // floor is connected.
  void validate() const;

  // '*' is a wall, ' ' is floor; every line has the same length.
  std::string to_text() const;
  static GridMaze from_text(const std::string& text);
};

std::vector<GridMaze> read_mazes(const std::string& path);
void write_mazes(const std::string& path, const std::vector<GridMaze>& mazes);

struct MazeConfig {
  int width = 9;
  int height = 9;
  int max_rooms = 2;
  int room_min = 3;
  int room_max = 3;
  int max_attempts = 100;

  void validate() const;
  static MazeConfig from_config(const Config& cfg);
};

// Rooms and corridors on the odd lattice: a depth-first corridor tree, then
// rectangular rooms, then every dead end is opened into a neighbor corridor.
GridMaze generate_maze(SeededRng& rng, const MazeConfig& config);

// Eleven types named by their open directions (subsets of "LURD" with at
// least two letters); one static observation per type; no Backtrack.
const GraphSchema& grid_schema();

struct GridGraph {
  GridMaze maze;
  TypedGraph graph;
  std::vector<std::pair<int, int>> cell;  // node -> (row, col)
  std::vector<int> node_at;               // row * width + col -> node or -1
  // Cardinal successor of each node in the order left, up, right, down; a
  // blocked direction maps to the node itself.
  std::vector<std::array<int, 4>> step;

  int num_nodes() const { return static_cast<int>(cell.size()); }
};

GridGraph grid_to_graph(const GridMaze& maze);
PomdpInstance encode_grid(const GridGraph& g);

// Primary-agent MDP: four cardinal moves, then one action per option. Option
// k moves from n to m with probability options[k](n, m) and stays with the
// rest of the row's mass.
struct OptionMdp {
  int num_nodes = 0;
  std::vector<std::array<int, 4>> step;
  std::vector<DenseMatrix> options;

  int num_actions() const { return 4 + static_cast<int>(options.size()); }
};

OptionMdp augment_with_options(const GridGraph& g,
                               const std::vector<DenseMatrix>& adjacencies);

struct SoftQSolution {
  DenseMatrix q;   // node x action
  std::vector<double> v;
  DenseMatrix pi;  // node x action
  double residual = 0;  // max |V_new - V| of the last iteration
};

// Iterates Q <- E[V'] - 1, V <- alpha * logsumexp(Q / alpha) from V = 0 with
// the goal absorbing at V = 0. Actions that keep the agent in place with
// probability 1 are unavailable (Q = -inf, pi = 0), so a no-op option changes
// nothing. alpha = 1 is the plain soft Bellman update; it must stay below
// 1 / ln(actions) for the values to stay bounded.
SoftQSolution soft_q_solve(const OptionMdp& mdp, int goal, int iterations,
                           double alpha);

// Exact expected number of primary steps to reach the goal under pi, from
// every node (0 at the goal).
std::vector<double> expected_steps_exact(const OptionMdp& mdp, int goal,
                                         const DenseMatrix& pi);

// Mean steps over `rollouts` runs of pi from uniformly drawn non-goal
// starts, each capped at `cap` steps.
double expected_steps_rollout(const OptionMdp& mdp, int goal,
                              const DenseMatrix& pi, int rollouts, int cap,
                              SeededRng& rng);

struct GridTask {
  GridGraph graph;
  PomdpInstance instance;
  std::vector<int> goals;
};

GridTask make_task(const GridMaze& maze, int num_goals, SeededRng& rng);

struct GridTrainConfig {
  MazeConfig maze;
  int num_options = 4;
  int num_memory = 2;
  double init_beta = 0.2;
  bool log_form = false;
  int t_max = 64;
  int goals_per_maze = 8;
  int batch_size = 8;
  double lr = 0.01;
  double grad_clip = 10.0;
  int max_steps = 1000;
  int eval_every = 100;
  int soft_q_iterations = 512;
  double alpha = 0.2;
  // Largest soft-Q residual accepted before differentiating.
  double tolerance = 1e-6;
  int train_mazes = 200;
  int val_mazes = 16;
  int rollouts = 100;
  int rollout_cap = 500;
  std::uint64_t seed = 0;
  int workers = 1;
  double time_budget_s = 0;

  void validate() const;
  // Keys under [gridworld] and [maze].
  static GridTrainConfig from_config(const Config& cfg);
};

// Option tables from the layout's initializer, one stream per option.
std::vector<AutomatonParams> init_options(const ParamLayout& layout,
                                          const GridTrainConfig& cfg);

ParamLayout grid_layout(int num_memory);

// Option adjacencies: A_k(n, m) = p(AddEdgeAndStop at m | start n). Stop and
// running out of steps leave mass on the diagonal of the option MDP.
std::vector<DenseMatrix> option_adjacencies(
    const GridTask& task, const ParamLayout& layout,
    const std::vector<AutomatonParams>& options);

struct OuterGrad {
  double loss = 0;
  std::vector<std::vector<double>> grads;  // one per option table
  double max_residual = 0;
};

// L = -mean over (task, goal, non-goal start) of V_soft(start), and its
// gradient through the soft-Q fixed point (dense inverse of I - f_V^T) and
// the option solves.
OuterGrad gridworld_outer_grad(const std::vector<AutomatonParams>& options,
                               const ParamLayout& layout,
                               const std::vector<const GridTask*>& tasks,
                               const GridTrainConfig& cfg);

// Loss only, for finite differences.
double gridworld_loss(const std::vector<AutomatonParams>& options,
                      const ParamLayout& layout,
                      const std::vector<const GridTask*>& tasks,
                      const GridTrainConfig& cfg);

// Rollout mean of steps to goal over every (task, goal).
double mean_expected_steps(const std::vector<AutomatonParams>& options,
                           const ParamLayout& layout,
                           const std::vector<GridTask>& tasks,
                           const GridTrainConfig& cfg, std::uint64_t seed);

struct GridLogRow {
  int step = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double val_steps = 0;
  double wallclock = 0;
};

struct GridTrainResult {
  std::vector<AutomatonParams> options;  // at the best validation point
  std::vector<GridLogRow> log;
  double initial_val_steps = 0;
  double best_val_steps = 0;
  int best_step = 0;
};

std::vector<GridTask> make_tasks(const GridTrainConfig& cfg, int count,
                                 std::uint64_t stream);

GridTrainResult train_gridworld(const GridTrainConfig& cfg,
                                const std::function<void(const GridLogRow&)>& on_log = {});

void write_grid_log_csv(const std::string& path,
                        const std::vector<GridLogRow>& log);

// Adjacency as CSV with one row per source node.
std::string adjacency_csv(const DenseMatrix& a);
// Maze cells as boxes plus the option edges with weight >= threshold.
std::string options_dot(const GridGraph& g, const std::vector<DenseMatrix>& options,
                        double threshold);

}  // namespace gfsa::grid

#endif  // GFSA_GRIDWORLD_HPP_
