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

#ifndef GFSA_TRAINING_HPP_
#define GFSA_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gfsa/config.hpp"
#include "gfsa/gfsa.hpp"
#include "gfsa/python/dataset.hpp"

namespace gfsa {

inline constexpr double kFocalClamp = 1e-12;

// One pair's focal loss: -(1-A)^g log A for a positive pair, -A^g log(1-A)
// for a negative one, with A clamped to [1e-12, 1 - 1e-12]. Writes dL/dA
// (zero where the clamp is active) when `grad` is non-null.
double focal_term(double a, bool positive, double gamma, double* grad);

struct FocalResult {
  double loss = 0;
  DenseMatrix grad;  // dL/dA, nonzero only on the scored rows
};

// Sums focal_term over every (row, column) with row in `rows`; pairs in
// `targets` are positive.
FocalResult focal_loss(const DenseMatrix& a, const std::vector<int>& rows,
                       const python::EdgeSet& targets, double gamma);

// Scores of every (source, destination) pair of one example.
struct ScoredExample {
  std::vector<double> scores;
  std::vector<char> labels;
};

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const;
  double recall() const;
  // 2PR/(P+R), with 0/0 read as 0.
  double f1() const;
};

// Predicts positive when score >= threshold.
Confusion confusion_at(const std::vector<ScoredExample>& examples,
                       const std::vector<std::size_t>& subset,
                       double threshold);

// Threshold among the distinct scores of `subset` that maximizes F1; ties go
// to the larger threshold. With no positive pairs returns +infinity.
double best_threshold(const std::vector<ScoredExample>& examples,
                      const std::vector<std::size_t>& subset);

struct SplitReport {
  std::string name;
  double threshold = 0;
  double f1_mean = 0;
  double f1_stderr = 0;
  std::vector<double> fold_f1;
  Confusion pooled;  // over the evaluation folds
  std::string warning;

  nlohmann::json to_json() const;
};

// Splits the examples into `folds` contiguous folds, tunes the threshold on
// the first and reports F1 on the others (mean, and standard deviation over
// sqrt(folds - 1)).
SplitReport f1_best_threshold(const std::vector<ScoredExample>& examples,
                              int folds = 10, const std::string& name = "");

struct TrainConfig {
  double lr = 0.01;
  double grad_clip = 10.0;
  int batch_size = 8;
  double focal_gamma = 2.0;
  int num_memory = 4;
  double eps_bt_stop = 0.01;
  int t_max = 128;
  int max_steps = 20000;
  std::uint64_t seed = 0;
  int eval_every = 500;
  std::string early_stop_metric = "val_f1";
  // Start nodes solved per example and step; 0 solves every legal source.
  int starts_per_example = 0;
  double init_beta = 0.01;
  bool log_form = true;
  // Evaluations without improvement before stopping; 0 disables.
  int patience = 0;
  // Stop once validation F1 reaches this value.
  double target_val_f1 = 1.1;
  // Wallclock cap in seconds; 0 disables. Hitting it makes the run depend
  // on machine speed.
  double time_budget_s = 0;
  // Validation examples used per evaluation; 0 uses all.
  int val_limit = 0;
  int workers = 1;
  // REINFORCE only.
  int rollouts = 20;

  void validate() const;
  // Keys under [train]; absent keys keep their defaults.
  static TrainConfig from_config(const Config& cfg);
};

struct LogRow {
  int step = 0;
  double loss = 0;
  double val_f1 = std::numeric_limits<double>::quiet_NaN();
  double wallclock = 0;
};

struct TrainResult {
  AutomatonParams params;  // at the best validation point
  std::vector<LogRow> log;
  int best_step = 0;
  double best_val_f1 = 0;
  int steps_run = 0;
};

using LogFn = std::function<void(const LogRow&)>;

ParamLayout python_layout(int num_memory);

AutomatonParams initial_params(const ParamLayout& layout,
                               const TrainConfig& cfg);

// Exact scores of one program under `params`, sources restricted to the
// legal sources of `kind` and destinations ranging over every graph node.
ScoredExample score_example(const python::ProgramExample& ex,
                            const PomdpInstance& inst, python::EdgeKind kind,
                            const ParamLayout& layout,
                            const AutomatonParams& params,
                            const Policy& policy);

std::vector<ScoredExample> score_dataset(
    const std::vector<python::ProgramExample>& data, python::EdgeKind kind,
    const ParamLayout& layout, const AutomatonParams& params, int workers);

TrainResult train_edge_classifier(
    const std::vector<python::ProgramExample>& train,
    const std::vector<python::ProgramExample>& val, python::EdgeKind kind,
    const TrainConfig& cfg, const LogFn& on_log = {});

// REINFORCE with a leave-one-out baseline. One rollout starts at
// (initial state of n0, z0), samples the dynamic observation, then an
// (action, next memory) pair from the policy. Backtrack restarts from the
// initial state; the rollout ends at AddEdgeAndStop or Stop, or is cut off
// once t_max moves have been taken. Reward is 1 for adding an edge to a
// target, or for not adding one when there is none.
struct ReinforceEstimate {
  std::vector<double> grad;  // d E[reward] / d theta, ascent direction
  double mean_reward = 0;
  long rollouts = 0;
};

ReinforceEstimate reinforce_gradient(
    const PomdpInstance& inst, const ParamLayout& layout,
    const AutomatonParams& params, const Policy& policy,
    const std::vector<int>& starts,
    const std::vector<std::vector<int>>& targets, int rollouts,
    SeededRng& rng);

// Expected reward with Backtrack conditioned away: for each start,
// sum of A_hat over targets, or 1 - sum of A_hat when there are none.
double expected_reward(const PomdpInstance& inst, const ParamLayout& layout,
                       const AutomatonParams& params, const Policy& policy,
                       const std::vector<int>& starts,
                       const std::vector<std::vector<int>>& targets);

TrainResult reinforce_ablation(
    const std::vector<python::ProgramExample>& train,
    const std::vector<python::ProgramExample>& val, python::EdgeKind kind,
    const TrainConfig& cfg, const LogFn& on_log = {});

// Mean exact expected reward over the given examples and all legal sources.
double dataset_reward(const std::vector<python::ProgramExample>& data,
                      python::EdgeKind kind, const ParamLayout& layout,
                      const AutomatonParams& params, int workers);

void write_log_csv(const std::string& path, const std::vector<LogRow>& log);

}  // namespace gfsa

#endif  // GFSA_TRAINING_HPP_
