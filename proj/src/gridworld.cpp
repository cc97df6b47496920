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

#include "gfsa/gridworld.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gfsa/export.hpp"
#include "gfsa/parallel.hpp"

namespace gfsa::grid {

namespace {

constexpr int kDr[4] = {0, -1, 0, 1};
constexpr int kDc[4] = {-1, 0, 1, 0};
constexpr char kDirNames[4] = {'L', 'U', 'R', 'D'};

std::string type_name(const std::array<bool, 4>& nb) {
  std::string name;
  for (int d = 0; d < 4; ++d) {
    if (nb[d]) name += kDirNames[d];
  }
  return name;
}

}  // namespace

int GridMaze::num_open() const {
  return static_cast<int>(std::count(open.begin(), open.end(), 1));
}

std::array<bool, 4> GridMaze::neighbors(int row, int col) const {
  std::array<bool, 4> out{};
  for (int d = 0; d < 4; ++d) out[d] = is_open(row + kDr[d], col + kDc[d]);
  return out;
}

void GridMaze::validate() const {
  if (width < 1 || height < 1 ||
      open.size() != static_cast<std::size_t>(width) * height) {
    throw Error("maze: bad dimensions");
  }
  int first = -1;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (!is_open(r, c)) continue;
      if (first < 0) first = r * width + c;
      auto nb = neighbors(r, c);
      if (std::count(nb.begin(), nb.end(), true) < 2) {
        throw Error("maze: cell (" + std::to_string(r) + ", " + std::to_string(c) +
                    ") has fewer than two open neighbors");
      }
    }
  }
  if (first < 0) throw Error("maze: no open cells");
  std::vector<char> seen(open.size(), 0);
  std::vector<int> stack{first};
  seen[first] = 1;
  int count = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    ++count;
    int r = v / width, c = v % width;
    for (int d = 0; d < 4; ++d) {
      int nr = r + kDr[d], nc = c + kDc[d];
      if (is_open(nr, nc) && !seen[nr * width + nc]) {
        seen[nr * width + nc] = 1;
        stack.push_back(nr * width + nc);
      }
    }
  }
  if (count != num_open()) throw Error("maze: open cells are not connected");
}

std::string GridMaze::to_text() const {
  std::string out;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out += is_open(r, c) ? ' ' : '*';
    out += '\n';
  }
  return out;
}

GridMaze GridMaze::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  GridMaze m;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (m.height == 0) m.width = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != m.width) {
      throw Error("maze: line " + std::to_string(m.height + 1) + " has length " +
                  std::to_string(line.size()) + ", expected " + std::to_string(m.width));
    }
    for (char ch : line) {
      if (ch != '*' && ch != ' ') {
        throw Error(std::string("maze: unexpected character '") + ch + "'");
      }
      m.open.push_back(ch == ' ' ? 1 : 0);
    }
    ++m.height;
  }
  if (m.height == 0 || m.width == 0) throw Error("maze: empty");
  return m;
}

std::vector<GridMaze> read_mazes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open maze file " + path);
  std::vector<GridMaze> out;
  std::string line, block;
  auto flush = [&] {
    if (!block.empty()) out.push_back(GridMaze::from_text(block));
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) {
      flush();
    } else {
      block += line + "\n";
    }
  }
  flush();
  if (out.empty()) throw Error("maze file " + path + " holds no mazes");
  return out;
}

void write_mazes(const std::string& path, const std::vector<GridMaze>& mazes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write maze file " + path);
  for (std::size_t i = 0; i < mazes.size(); ++i) {
    if (i) out << '\n';
    out << mazes[i].to_text();
  }
}

void MazeConfig::validate() const {
  if (width < 5 || height < 5 || width % 2 == 0 || height % 2 == 0) {
    throw Error("maze config: width and height must be odd and at least 5");
  }
  if (max_rooms < 0) throw Error("maze config: max_rooms must be non-negative");
  if (room_min < 1 || room_max < room_min) {
    throw Error("maze config: need 1 <= room_min <= room_max");
  }
  if (room_max > std::min(width, height) - 2) {
    throw Error("maze config: rooms do not fit inside the border");
  }
  if (max_attempts < 1) throw Error("maze config: max_attempts must be positive");
}

MazeConfig MazeConfig::from_config(const Config& cfg) {
  MazeConfig m;
  m.width = static_cast<int>(cfg.get_int("maze.width", m.width));
  m.height = static_cast<int>(cfg.get_int("maze.height", m.height));
  m.max_rooms = static_cast<int>(cfg.get_int("maze.max_rooms", m.max_rooms));
  m.room_min = static_cast<int>(cfg.get_int("maze.room_min", m.room_min));
  m.room_max = static_cast<int>(cfg.get_int("maze.room_max", m.room_max));
  m.max_attempts = static_cast<int>(cfg.get_int("maze.max_attempts", m.max_attempts));
  m.validate();
  return m;
}

GridMaze generate_maze(SeededRng& rng, const MazeConfig& cfg) {
  cfg.validate();
  const int h = cfg.height, w = cfg.width;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    GridMaze m{w, h, std::vector<char>(static_cast<std::size_t>(w) * h, 0)};
    auto carve = [&](int r, int c) { m.open[static_cast<std::size_t>(r) * w + c] = 1; };
    // Corridor tree over the odd lattice.
    int lr = (h - 1) / 2, lc = (w - 1) / 2;
    std::vector<char> visited(static_cast<std::size_t>(lr) * lc, 0);
    int start = static_cast<int>(rng.below(visited.size()));
    std::vector<int> stack{start};
    visited[start] = 1;
    carve(2 * (start / lc) + 1, 2 * (start % lc) + 1);
    while (!stack.empty()) {
      int v = stack.back();
      int r = v / lc, c = v % lc;
      std::vector<int> dirs;
      for (int d = 0; d < 4; ++d) {
        int nr = r + kDr[d], nc = c + kDc[d];
        if (nr >= 0 && nc >= 0 && nr < lr && nc < lc && !visited[nr * lc + nc]) {
          dirs.push_back(d);
        }
      }
      if (dirs.empty()) {
        stack.pop_back();
        continue;
      }
      int d = dirs[rng.below(dirs.size())];
      int nr = r + kDr[d], nc = c + kDc[d];
      visited[nr * lc + nc] = 1;
      carve(2 * r + 1 + kDr[d], 2 * c + 1 + kDc[d]);
      carve(2 * nr + 1, 2 * nc + 1);
      stack.push_back(nr * lc + nc);
    }
    // Rooms, anchored on lattice cells.
    int rooms = static_cast<int>(rng.below(cfg.max_rooms + 1));
    for (int k = 0; k < rooms; ++k) {
      int rh = cfg.room_min + static_cast<int>(rng.below(cfg.room_max - cfg.room_min + 1));
      int rw = cfg.room_min + static_cast<int>(rng.below(cfg.room_max - cfg.room_min + 1));
      int top_slots = (h - 1 - rh) / 2 + 1, left_slots = (w - 1 - rw) / 2 + 1;
      if (top_slots < 1 || left_slots < 1) continue;
      int top = 2 * static_cast<int>(rng.below(top_slots)) + 1;
      int left = 2 * static_cast<int>(rng.below(left_slots)) + 1;
      for (int r = top; r < std::min(top + rh, h - 1); ++r) {
        for (int c = left; c < std::min(left + rw, w - 1); ++c) carve(r, c);
      }
    }
    // Open every dead end into a second neighbor.
    for (bool changed = true; changed;) {
      changed = false;
      for (int r = 1; r < h - 1; ++r) {
        for (int c = 1; c < w - 1; ++c) {
          if (!m.is_open(r, c)) continue;
          auto nb = m.neighbors(r, c);
          if (std::count(nb.begin(), nb.end(), true) >= 2) continue;
          std::vector<int> dirs;
          for (int d = 0; d < 4; ++d) {
            int wr = r + kDr[d], wc = c + kDc[d];
            int br = r + 2 * kDr[d], bc = c + 2 * kDc[d];
            if (!nb[d] && wr > 0 && wc > 0 && wr < h - 1 && wc < w - 1 &&
                m.is_open(br, bc)) {
              dirs.push_back(d);
            }
          }
          if (dirs.empty()) continue;
          int d = dirs[rng.below(dirs.size())];
          carve(r + kDr[d], c + kDc[d]);
          changed = true;
        }
      }
    }
    try {
      m.validate();
      return m;
    } catch (const Error&) {
      // Rare odd shapes around room edges; draw again.
    }
  }
  throw Error("generate_maze: no valid maze after " +
              std::to_string(cfg.max_attempts) + " attempts");
}

const GraphSchema& grid_schema() {
  static const GraphSchema schema = [] {
    GraphSchema s;
    s.allow_backtrack = false;
    for (const char* name : {"LU", "LR", "LD", "UR", "UD", "RD", "LUR", "LUD",
                             "LRD", "URD", "LURD"}) {
      NodeTypeSpec t;
      t.name = name;
      for (const char* p = name; *p; ++p) t.movements.emplace_back(1, *p);
      t.observations = {name};
      t.missing_observation.assign(t.movements.size(), -1);
      s.node_types.push_back(std::move(t));
    }
    s.validate();
    return s;
  }();
  return schema;
}

GridGraph grid_to_graph(const GridMaze& maze) {
  maze.validate();
  const GraphSchema& schema = grid_schema();
  GridGraph g;
  g.maze = maze;
  g.node_at.assign(maze.open.size(), -1);
  for (int r = 0; r < maze.height; ++r) {
    for (int c = 0; c < maze.width; ++c) {
      if (!maze.is_open(r, c)) continue;
      g.node_at[r * maze.width + c] = static_cast<int>(g.cell.size());
      g.cell.emplace_back(r, c);
      g.graph.node_types.push_back(schema.find_type(type_name(maze.neighbors(r, c))));
    }
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    auto [r, c] = g.cell[v];
    std::array<int, 4> step{};
    const NodeTypeSpec& t = schema.node_types[g.graph.node_types[v]];
    for (int d = 0; d < 4; ++d) {
      int nr = r + kDr[d], nc = c + kDc[d];
      if (!maze.is_open(nr, nc)) {
        step[d] = v;
        continue;
      }
      step[d] = g.node_at[nr * maze.width + nc];
      int label = static_cast<int>(
          std::find(t.movements.begin(), t.movements.end(), std::string(1, kDirNames[d])) -
          t.movements.begin());
      g.graph.edges.push_back({v, step[d], label, -1});
    }
    g.step.push_back(step);
  }
  return g;
}

PomdpInstance encode_grid(const GridGraph& g) {
  return encode_graph(g.graph, grid_schema());
}

OptionMdp augment_with_options(const GridGraph& g,
                               const std::vector<DenseMatrix>& adjacencies) {
  OptionMdp mdp;
  mdp.num_nodes = g.num_nodes();
  mdp.step = g.step;
  for (std::size_t k = 0; k < adjacencies.size(); ++k) {
    const DenseMatrix& a = adjacencies[k];
    if (a.rows() != static_cast<std::size_t>(mdp.num_nodes) || a.cols() != a.rows()) {
      throw Error("augment_with_options: option " + std::to_string(k) +
                  " adjacency has the wrong shape");
    }
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double total = 0;
      for (double x : a.row(r)) {
        if (x < 0 || !std::isfinite(x)) {
          throw Error("augment_with_options: option " + std::to_string(k) +
                      " has a negative or non-finite weight in row " + std::to_string(r));
        }
        total += x;
      }
      if (total > 1 + 1e-9) {
        throw Error("augment_with_options: option " + std::to_string(k) + " row " +
                    std::to_string(r) + " sums to more than 1");
      }
    }
    mdp.options.push_back(a);
  }
  return mdp;
}

namespace {

// E[V(s') | s, a] for every action at s. Actions that surely leave the agent
// where it is (a move into a wall, an option with no off-diagonal mass) are
// not offered and get -inf.
void expected_next(const OptionMdp& mdp, const std::vector<double>& v,
                   const std::vector<double>& row_mass, int s, double* out) {
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  for (int d = 0; d < 4; ++d) out[d] = mdp.step[s][d] == s ? kNone : v[mdp.step[s][d]];
  for (std::size_t k = 0; k < mdp.options.size(); ++k) {
    auto row = mdp.options[k].row(s);
    double acc = 0;
    for (int m = 0; m < mdp.num_nodes; ++m) acc += row[m] * v[m];
    double mass = row_mass[k * mdp.num_nodes + s];
    out[4 + k] = mass - row[s] > 0 ? acc + (1.0 - mass) * v[s] : kNone;
  }
}

std::vector<double> option_row_mass(const OptionMdp& mdp) {
  std::vector<double> mass(mdp.options.size() * mdp.num_nodes, 0.0);
  for (std::size_t k = 0; k < mdp.options.size(); ++k) {
    for (int s = 0; s < mdp.num_nodes; ++s) {
      auto row = mdp.options[k].row(s);
      mass[k * mdp.num_nodes + s] = std::accumulate(row.begin(), row.end(), 0.0);
    }
  }
  return mass;
}

// Dense P_pi(s, s') = sum_a pi(a|s) P(s'|s,a), with the goal row zero.
Eigen::MatrixXd policy_transitions(const OptionMdp& mdp, int goal,
                                   const DenseMatrix& pi) {
  int n = mdp.num_nodes;
  auto mass = option_row_mass(mdp);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    if (s == goal) continue;
    for (int d = 0; d < 4; ++d) p(s, mdp.step[s][d]) += pi(s, d);
    for (std::size_t k = 0; k < mdp.options.size(); ++k) {
      double w = pi(s, 4 + k);
      auto row = mdp.options[k].row(s);
      for (int m = 0; m < n; ++m) p(s, m) += w * row[m];
      p(s, s) += w * (1.0 - mass[k * n + s]);
    }
  }
  return p;
}

}  // namespace

SoftQSolution soft_q_solve(const OptionMdp& mdp, int goal, int iterations,
                           double alpha) {
  int n = mdp.num_nodes, na = mdp.num_actions();
  if (goal < 0 || goal >= n) throw Error("soft_q_solve: goal is not a node");
  if (iterations < 1) throw Error("soft_q_solve: need at least one iteration");
  if (!(alpha > 0)) throw Error("soft_q_solve: alpha must be positive");
  auto mass = option_row_mass(mdp);
  SoftQSolution sol{DenseMatrix(n, na), std::vector<double>(n, 0.0), DenseMatrix(n, na), 0};
  std::vector<double> next(n, 0.0), scaled(na);
  for (int it = 0; it < iterations; ++it) {
    double residual = 0;
    for (int s = 0; s < n; ++s) {
      double* q = &sol.q(s, 0);
      if (s == goal) {
        std::fill(q, q + na, 0.0);
        next[s] = 0;
        continue;
      }
      expected_next(mdp, sol.v, mass, s, q);
      for (int a = 0; a < na; ++a) {
        q[a] -= 1.0;
        scaled[a] = q[a] / alpha;
      }
      next[s] = alpha * logsumexp(scaled);
      if (!std::isfinite(next[s])) {
        throw Error("soft_q_solve: value at node " + std::to_string(s) +
                    " is not finite at iteration " + std::to_string(it));
      }
      residual = std::max(residual, std::abs(next[s] - sol.v[s]));
    }
    sol.v.swap(next);
    sol.residual = residual;
  }
  for (int s = 0; s < n; ++s) {
    if (s == goal) continue;
    for (int a = 0; a < na; ++a) sol.pi(s, a) = std::exp((sol.q(s, a) - sol.v[s]) / alpha);
  }
  // The goal row is never used; make it uniform over the offered actions.
  std::vector<double> offered(na);
  expected_next(mdp, sol.v, mass, goal, offered.data());
  int count = static_cast<int>(std::count_if(offered.begin(), offered.end(),
                                             [](double x) { return std::isfinite(x); }));
  for (int a = 0; a < na; ++a) {
    sol.pi(goal, a) = std::isfinite(offered[a]) ? 1.0 / count : 0.0;
  }
  return sol;
}

std::vector<double> expected_steps_exact(const OptionMdp& mdp, int goal,
                                         const DenseMatrix& pi) {
  int n = mdp.num_nodes;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - policy_transitions(mdp, goal, pi);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  ones(goal) = 0;
  Eigen::VectorXd t = m.partialPivLu().solve(ones);
  if (!t.allFinite() || (m * t - ones).lpNorm<Eigen::Infinity>() > 1e-6) {
    throw Error("expected_steps_exact: goal " + std::to_string(goal) +
                " is not reached with probability 1 under pi");
  }
  return {t.data(), t.data() + n};
}

double expected_steps_rollout(const OptionMdp& mdp, int goal,
                              const DenseMatrix& pi, int rollouts, int cap,
                              SeededRng& rng) {
  int n = mdp.num_nodes;
  if (n < 2) return 0;
  auto mass = option_row_mass(mdp);
  std::vector<double> w(n + 1);
  long total = 0;
  for (int k = 0; k < rollouts; ++k) {
    int s = static_cast<int>(rng.below(n - 1));
    if (s >= goal) ++s;
    int steps = 0;
    while (s != goal && steps < cap) {
      int a = static_cast<int>(rng.categorical(pi.row(s)));
      ++steps;
      if (a < 4) {
        s = mdp.step[s][a];
        continue;
      }
      auto row = mdp.options[a - 4].row(s);
      std::copy(row.begin(), row.end(), w.begin());
      w[n] = std::max(0.0, 1.0 - mass[(a - 4) * n + s]);
      int next = static_cast<int>(rng.categorical(w));
      if (next < n) s = next;
    }
    total += steps;
  }
  return static_cast<double>(total) / rollouts;
}

GridTask make_task(const GridMaze& maze, int num_goals, SeededRng& rng) {
  GridTask t;
  t.graph = grid_to_graph(maze);
  t.instance = encode_grid(t.graph);
  int n = t.graph.num_nodes();
  std::vector<int> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0);
  int k = std::min(num_goals, n);
  for (int i = 0; i < k; ++i) {
    std::swap(nodes[i], nodes[i + rng.below(n - i)]);
  }
  t.goals.assign(nodes.begin(), nodes.begin() + k);
  return t;
}

void GridTrainConfig::validate() const {
  maze.validate();
  if (num_options < 0) throw Error("gridworld: num_options must be non-negative");
  if (num_memory < 1) throw Error("gridworld: num_memory must be positive");
  if (!(init_beta > 0)) throw Error("gridworld: init_beta must be positive");
  if (t_max < 1) throw Error("gridworld: t_max must be positive");
  if (goals_per_maze < 1) throw Error("gridworld: goals_per_maze must be positive");
  if (batch_size < 1) throw Error("gridworld: batch_size must be positive");
  if (!(lr >= 0)) throw Error("gridworld: lr must be non-negative");
  if (!(grad_clip > 0)) throw Error("gridworld: grad_clip must be positive");
  if (eval_every < 1) throw Error("gridworld: eval_every must be positive");
  if (soft_q_iterations < 1) throw Error("gridworld: soft_q_iterations must be positive");
  if (!(alpha > 0)) throw Error("gridworld: alpha must be positive");
  if (train_mazes < 1 || val_mazes < 1) throw Error("gridworld: need mazes to train and validate");
  if (rollouts < 1 || rollout_cap < 1) throw Error("gridworld: rollouts and cap must be positive");
  if (workers < 1) throw Error("gridworld: workers must be positive");
}

GridTrainConfig GridTrainConfig::from_config(const Config& c) {
  GridTrainConfig g;
  g.maze = MazeConfig::from_config(c);
  g.num_options = static_cast<int>(c.get_int("gridworld.num_options", g.num_options));
  g.num_memory = static_cast<int>(c.get_int("gridworld.num_memory", g.num_memory));
  g.init_beta = c.get_double("gridworld.init_beta", g.init_beta);
  g.log_form = c.get_bool("gridworld.log_form", g.log_form);
  g.t_max = static_cast<int>(c.get_int("gridworld.t_max", g.t_max));
  g.goals_per_maze = static_cast<int>(c.get_int("gridworld.goals_per_maze", g.goals_per_maze));
  g.batch_size = static_cast<int>(c.get_int("gridworld.batch_size", g.batch_size));
  g.lr = c.get_double("gridworld.lr", g.lr);
  g.grad_clip = c.get_double("gridworld.grad_clip", g.grad_clip);
  g.max_steps = static_cast<int>(c.get_int("gridworld.max_steps", g.max_steps));
  g.eval_every = static_cast<int>(c.get_int("gridworld.eval_every", g.eval_every));
  g.soft_q_iterations =
      static_cast<int>(c.get_int("gridworld.soft_q_iterations", g.soft_q_iterations));
  g.alpha = c.get_double("gridworld.alpha", g.alpha);
  g.tolerance = c.get_double("gridworld.tolerance", g.tolerance);
  g.train_mazes = static_cast<int>(c.get_int("gridworld.train_mazes", g.train_mazes));
  g.val_mazes = static_cast<int>(c.get_int("gridworld.val_mazes", g.val_mazes));
  g.rollouts = static_cast<int>(c.get_int("gridworld.rollouts", g.rollouts));
  g.rollout_cap = static_cast<int>(c.get_int("gridworld.rollout_cap", g.rollout_cap));
  g.seed = static_cast<std::uint64_t>(c.get_int("gridworld.seed", static_cast<std::int64_t>(g.seed)));
  g.workers = static_cast<int>(c.get_int("gridworld.workers", g.workers));
  g.time_budget_s = c.get_double("gridworld.time_budget_s", g.time_budget_s);
  g.validate();
  return g;
}

ParamLayout grid_layout(int num_memory) {
  return ParamLayout(grid_schema(), num_memory);
}

std::vector<AutomatonParams> init_options(const ParamLayout& layout,
                                          const GridTrainConfig& cfg) {
  SeededRng root = SeededRng(cfg.seed).split(0);
  std::vector<AutomatonParams> out;
  for (int k = 0; k < cfg.num_options; ++k) {
    SeededRng rng = root.split(k);
    AutomatonParams p = init_params(rng, layout, cfg.init_beta, cfg.log_form);
    p.t_max = cfg.t_max;
    p.z0 = 0;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct OptionSolve {
  Policy policy;
  AbsorbingDistribution dist;
  DenseMatrix adjacency;
};

std::vector<OptionSolve> solve_options(const GridTask& task,
                                       const ParamLayout& layout,
                                       const std::vector<AutomatonParams>& options) {
  std::vector<OptionSolve> out;
  int n = task.graph.num_nodes();
  for (const AutomatonParams& p : options) {
    OptionSolve o;
    o.policy = normalize_policy(layout, p);
    o.dist = solve_absorbing(task.instance, layout, o.policy, p.z0, p.t_max);
    o.adjacency = DenseMatrix(n, n);
    for (int s = 0; s < n; ++s) {
      for (int m = 0; m < n; ++m) o.adjacency(s, m) = o.dist.prob(s, Halt::kAddEdge, m);
    }
    out.push_back(std::move(o));
  }
  return out;
}

struct TaskGrad {
  double loss = 0;
  double max_residual = 0;
  std::vector<std::vector<double>> grads;
};

TaskGrad task_grad(const GridTask& task, const ParamLayout& layout,
                   const std::vector<AutomatonParams>& options,
                   const GridTrainConfig& cfg, double weight, bool with_grad) {
  auto solves = solve_options(task, layout, options);
  std::vector<DenseMatrix> adj;
  for (const auto& o : solves) adj.push_back(o.adjacency);
  OptionMdp mdp = augment_with_options(task.graph, adj);
  int n = mdp.num_nodes, nk = static_cast<int>(options.size());
  TaskGrad out;
  if (n < 2) return out;
  std::vector<DenseMatrix> da(nk, DenseMatrix(n, n));
  double per_value = weight / (static_cast<double>(task.goals.size()) * (n - 1));
  for (int g : task.goals) {
    SoftQSolution sol = soft_q_solve(mdp, g, cfg.soft_q_iterations, cfg.alpha);
    out.max_residual = std::max(out.max_residual, sol.residual);
    for (int s = 0; s < n; ++s) {
      if (s != g) out.loss -= per_value * sol.v[s];
    }
    if (!with_grad) continue;
    if (!(sol.residual <= cfg.tolerance)) {
      throw Error("gridworld: soft-Q residual " + std::to_string(sol.residual) +
                  " exceeds tolerance " + std::to_string(cfg.tolerance) + " (goal " +
                  std::to_string(g) + ")");
    }
    // lambda = (I - f_V^T)^{-1} dL/dV, with f_V = P_pi.
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) -
                        policy_transitions(mdp, g, sol.pi).transpose();
    Eigen::VectorXd dv = Eigen::VectorXd::Constant(n, -per_value);
    dv(g) = 0;
    Eigen::MatrixXd inv = m.inverse();
    Eigen::VectorXd lambda = inv * dv;
    double check = (m * lambda - dv).lpNorm<Eigen::Infinity>();
    if (!lambda.allFinite() || check > 1e-8 * (1.0 + dv.lpNorm<Eigen::Infinity>())) {
      throw Error("gridworld: I - f_V is singular (solve residual " +
                  std::to_string(check) + ", goal " + std::to_string(g) + ")");
    }
    for (int k = 0; k < nk; ++k) {
      for (int s = 0; s < n; ++s) {
        if (s == g) continue;
        double coef = lambda(s) * sol.pi(s, 4 + k);
        if (coef == 0) continue;
        for (int mm = 0; mm < n; ++mm) da[k](s, mm) += coef * (sol.v[mm] - sol.v[s]);
      }
    }
  }
  if (!with_grad) return out;
  for (int k = 0; k < nk; ++k) {
    std::vector<double> dprobs(solves[k].dist.probs.size(), 0.0);
    for (int s = 0; s < n; ++s) {
      for (int mm = 0; mm < n; ++mm) {
        dprobs[solves[k].dist.prob_index(s, Halt::kAddEdge, mm)] = da[k](s, mm);
      }
    }
    out.grads.push_back(backward_absorbing(task.instance, layout, options[k],
                                           solves[k].policy, solves[k].dist, dprobs));
  }
  return out;
}

OuterGrad outer(const std::vector<AutomatonParams>& options,
                const ParamLayout& layout, const std::vector<const GridTask*>& tasks,
                const GridTrainConfig& cfg, bool with_grad) {
  if (tasks.empty()) throw Error("gridworld: empty batch");
  for (const auto& p : options) p.validate(layout);
  double weight = 1.0 / static_cast<double>(tasks.size());
  auto parts = parallel_map<TaskGrad>(tasks.size(), cfg.workers, [&](std::size_t i) {
    return task_grad(*tasks[i], layout, options, cfg, weight, with_grad);
  });
  OuterGrad out;
  out.grads.assign(options.size(), std::vector<double>(layout.size(), 0.0));
  for (const TaskGrad& p : parts) {
    out.loss += p.loss;
    out.max_residual = std::max(out.max_residual, p.max_residual);
    for (std::size_t k = 0; k < p.grads.size(); ++k) {
      for (std::size_t i = 0; i < p.grads[k].size(); ++i) out.grads[k][i] += p.grads[k][i];
    }
  }
  return out;
}

}  // namespace

std::vector<DenseMatrix> option_adjacencies(const GridTask& task,
                                            const ParamLayout& layout,
                                            const std::vector<AutomatonParams>& options) {
  std::vector<DenseMatrix> out;
  for (auto& o : solve_options(task, layout, options)) out.push_back(std::move(o.adjacency));
  return out;
}

OuterGrad gridworld_outer_grad(const std::vector<AutomatonParams>& options,
                               const ParamLayout& layout,
                               const std::vector<const GridTask*>& tasks,
                               const GridTrainConfig& cfg) {
  return outer(options, layout, tasks, cfg, true);
}

double gridworld_loss(const std::vector<AutomatonParams>& options,
                      const ParamLayout& layout,
                      const std::vector<const GridTask*>& tasks,
                      const GridTrainConfig& cfg) {
  return outer(options, layout, tasks, cfg, false).loss;
}

double mean_expected_steps(const std::vector<AutomatonParams>& options,
                           const ParamLayout& layout,
                           const std::vector<GridTask>& tasks,
                           const GridTrainConfig& cfg, std::uint64_t seed) {
  auto per_task = parallel_map<double>(tasks.size(), cfg.workers, [&](std::size_t i) {
    const GridTask& task = tasks[i];
    OptionMdp mdp = augment_with_options(task.graph, option_adjacencies(task, layout, options));
    double total = 0;
    for (std::size_t j = 0; j < task.goals.size(); ++j) {
      SoftQSolution sol = soft_q_solve(mdp, task.goals[j], cfg.soft_q_iterations, cfg.alpha);
      SeededRng rng = SeededRng(seed).split(i).split(j);
      total += expected_steps_rollout(mdp, task.goals[j], sol.pi, cfg.rollouts,
                                      cfg.rollout_cap, rng);
    }
    return task.goals.empty() ? 0.0 : total / static_cast<double>(task.goals.size());
  });
  return std::accumulate(per_task.begin(), per_task.end(), 0.0) /
         static_cast<double>(per_task.size());
}

std::vector<GridTask> make_tasks(const GridTrainConfig& cfg, int count,
                                 std::uint64_t stream) {
  SeededRng root = SeededRng(cfg.seed).split(stream + 1);
  return parallel_map<GridTask>(count, cfg.workers, [&](std::size_t i) {
    SeededRng rng = root.split(i);
    GridMaze maze = generate_maze(rng, cfg.maze);
    return make_task(maze, cfg.goals_per_maze, rng);
  });
}

GridTrainResult train_gridworld(const GridTrainConfig& cfg,
                                const std::function<void(const GridLogRow&)>& on_log) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  ParamLayout layout = grid_layout(cfg.num_memory);
  auto options = init_options(layout, cfg);
  auto train = make_tasks(cfg, cfg.train_mazes, 1);
  auto val = make_tasks(cfg, cfg.val_mazes, 2);
  // The same rollout streams at every evaluation, so changes come from the
  // options only.
  const std::uint64_t eval_seed = mix64(cfg.seed ^ 0x5eedULL);

  GridTrainResult result;
  result.options = options;
  result.initial_val_steps = mean_expected_steps(options, layout, val, cfg, eval_seed);
  result.best_val_steps = result.initial_val_steps;
  GridLogRow first{0, std::numeric_limits<double>::quiet_NaN(), result.initial_val_steps, elapsed()};
  result.log.push_back(first);
  if (on_log) on_log(first);

  std::size_t per = layout.size();
  std::vector<double> flat(per * options.size());
  for (std::size_t k = 0; k < options.size(); ++k) {
    std::copy(options[k].theta.begin(), options[k].theta.end(), flat.begin() + k * per);
  }
  AdamState adam = AdamState::create(flat.size(), cfg.lr);
  SeededRng root = SeededRng(cfg.seed).split(3);
  double loss_sum = 0;
  int loss_count = 0;
  std::vector<double> grad(flat.size());
  for (int step = 1; step <= cfg.max_steps; ++step) {
    SeededRng rng = root.split(step);
    std::vector<const GridTask*> batch;
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(&train[rng.below(train.size())]);
    OuterGrad g = gridworld_outer_grad(options, layout, batch, cfg);
    if (!std::isfinite(g.loss)) {
      throw Error("gridworld training diverged at step " + std::to_string(step));
    }
    for (std::size_t k = 0; k < options.size(); ++k) {
      std::copy(g.grads[k].begin(), g.grads[k].end(), grad.begin() + k * per);
    }
    clip_global_norm(grad, cfg.grad_clip);
    adam_step(flat, grad, adam);
    for (std::size_t k = 0; k < options.size(); ++k) {
      std::copy(flat.begin() + k * per, flat.begin() + (k + 1) * per, options[k].theta.begin());
    }
    loss_sum += g.loss;
    ++loss_count;
    bool out_of_time = cfg.time_budget_s > 0 && elapsed() > cfg.time_budget_s;
    if (step % cfg.eval_every == 0 || step == cfg.max_steps || out_of_time) {
      GridLogRow row{step, loss_sum / loss_count,
                     mean_expected_steps(options, layout, val, cfg, eval_seed), elapsed()};
      loss_sum = 0;
      loss_count = 0;
      result.log.push_back(row);
      if (on_log) on_log(row);
      if (row.val_steps < result.best_val_steps) {
        result.best_val_steps = row.val_steps;
        result.best_step = step;
        result.options = options;
      }
    }
    if (out_of_time) break;
  }
  return result;
}

void write_grid_log_csv(const std::string& path, const std::vector<GridLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write log " + path);
  out << "step,loss,val_steps,wallclock\n";
  out.precision(10);
  for (const GridLogRow& r : log) {
    out << r.step << ',';
    if (std::isfinite(r.loss)) out << r.loss;
    out << ',' << r.val_steps << ',' << r.wallclock << '\n';
  }
}

std::string adjacency_csv(const DenseMatrix& a) { return matrix_csv(a); }

std::string options_dot(const GridGraph& g, const std::vector<DenseMatrix>& options,
                        double threshold) {
  static const char* colors[] = {"red", "blue", "darkgreen", "orange", "purple", "brown"};
  std::ostringstream out;
  out << "digraph options {\n  node [shape=box, width=0.3, height=0.3, label=\"\"];\n";
  for (int v = 0; v < g.num_nodes(); ++v) {
    out << "  n" << v << " [pos=\"" << g.cell[v].second << "," << -g.cell[v].first
        << "!\"];\n";
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    for (int d = 0; d < 4; ++d) {
      int u = g.step[v][d];
      if (u > v) out << "  n" << v << " -> n" << u << " [dir=none, color=gray];\n";
    }
  }
  for (std::size_t k = 0; k < options.size(); ++k) {
    for (int v = 0; v < g.num_nodes(); ++v) {
      for (int u = 0; u < g.num_nodes(); ++u) {
        double w = options[k](v, u);
        if (u == v || w < threshold) continue;
        out << "  n" << v << " -> n" << u << " [color=" << colors[k % 6]
            << ", penwidth=" << 0.5 + 2.5 * w << ", label=\"" << k << "\"];\n";
      }
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace gfsa::grid
