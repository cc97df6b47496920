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

#include "gfsa/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gfsa/parallel.hpp"
#include "gfsa/python/encoding.hpp"

namespace gfsa {

using python::EdgeKind;
using python::EdgeSet;
using python::ProgramExample;

double focal_term(double a, bool positive, double gamma, double* grad) {
  double p = positive ? a : 1.0 - a;
  bool clamped = false;
  if (p < kFocalClamp) {
    p = kFocalClamp;
    clamped = true;
  } else if (p > 1.0 - kFocalClamp) {
    p = 1.0 - kFocalClamp;
    clamped = true;
  }
  // In terms of p, the probability given to the correct label:
  // L = -(1-p)^g log p.
  double q = 1.0 - p;
  double weight = gamma == 0 ? 1.0 : std::pow(q, gamma);
  double loss = -weight * std::log(p);
  if (grad) {
    double dp = 0;
    if (!clamped) {
      dp = -weight / p;
      if (gamma != 0) dp += gamma * std::pow(q, gamma - 1) * std::log(p);
    }
    *grad = positive ? dp : -dp;
  }
  return loss;
}

FocalResult focal_loss(const DenseMatrix& a, const std::vector<int>& rows,
                       const EdgeSet& targets, double gamma) {
  if (gamma < 0) throw Error("focal_loss: gamma must be non-negative");
  FocalResult out{0.0, DenseMatrix(a.rows(), a.cols())};
  for (int r : rows) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      bool pos = targets.count({r, static_cast<int>(c)}) > 0;
      out.loss += focal_term(a(r, c), pos, gamma, &out.grad(r, c));
    }
  }
  return out;
}

double Confusion::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
}

double Confusion::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
}

double Confusion::f1() const {
  double p = precision(), r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

Confusion confusion_at(const std::vector<ScoredExample>& examples,
                       const std::vector<std::size_t>& subset,
                       double threshold) {
  Confusion c;
  for (std::size_t i : subset) {
    const ScoredExample& ex = examples[i];
    for (std::size_t k = 0; k < ex.scores.size(); ++k) {
      bool pred = ex.scores[k] >= threshold;
      if (ex.labels[k]) {
        pred ? ++c.tp : ++c.fn;
      } else {
        pred ? ++c.fp : ++c.tn;
      }
    }
  }
  return c;
}

double best_threshold(const std::vector<ScoredExample>& examples,
                      const std::vector<std::size_t>& subset) {
  std::vector<std::pair<double, char>> pairs;
  long positives = 0;
  for (std::size_t i : subset) {
    const ScoredExample& ex = examples[i];
    for (std::size_t k = 0; k < ex.scores.size(); ++k) {
      pairs.emplace_back(ex.scores[k], ex.labels[k]);
      positives += ex.labels[k];
    }
  }
  double best = std::numeric_limits<double>::infinity();
  if (positives == 0) return best;
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  // Sweep thresholds from high to low; a threshold admits every pair
  // scoring at least as much.
  long tp = 0, fp = 0;
  double best_f1 = -1;
  for (std::size_t k = 0; k < pairs.size();) {
    double t = pairs[k].first;
    while (k < pairs.size() && pairs[k].first == t) {
      pairs[k].second ? ++tp : ++fp;
      ++k;
    }
    double f1 = 2.0 * tp / (2.0 * tp + fp + (positives - tp));
    if (f1 > best_f1) {
      best_f1 = f1;
      best = t;
    }
  }
  return best;
}

nlohmann::json SplitReport::to_json() const {
  nlohmann::json j = {{"name", name},
                      {"threshold", std::isfinite(threshold) ? nlohmann::json(threshold)
                                                             : nlohmann::json("inf")},
                      {"f1", f1_mean},
                      {"f1_stderr", f1_stderr},
                      {"fold_f1", fold_f1},
                      {"precision", pooled.precision()},
                      {"recall", pooled.recall()},
                      {"tp", pooled.tp},
                      {"fp", pooled.fp},
                      {"fn", pooled.fn},
                      {"tn", pooled.tn}};
  if (!warning.empty()) j["warning"] = warning;
  return j;
}

SplitReport f1_best_threshold(const std::vector<ScoredExample>& examples,
                              int folds, const std::string& name) {
  if (folds < 2) throw Error("f1_best_threshold: need at least two folds");
  if (examples.size() < static_cast<std::size_t>(folds)) {
    throw Error("f1_best_threshold: " + std::to_string(examples.size()) +
                " examples cannot fill " + std::to_string(folds) + " folds");
  }
  std::size_t n = examples.size();
  auto fold = [&](int f) {
    std::vector<std::size_t> idx;
    for (std::size_t i = n * f / folds; i < n * (f + 1) / folds; ++i) idx.push_back(i);
    return idx;
  };
  SplitReport r;
  r.name = name;
  r.threshold = best_threshold(examples, fold(0));
  if (!std::isfinite(r.threshold)) {
    r.warning = "tuning fold has no positive pairs; recall treated as 0";
  }
  std::vector<std::size_t> rest;
  for (int f = 1; f < folds; ++f) {
    auto idx = fold(f);
    rest.insert(rest.end(), idx.begin(), idx.end());
    r.fold_f1.push_back(confusion_at(examples, idx, r.threshold).f1());
  }
  r.pooled = confusion_at(examples, rest, r.threshold);
  double mean = std::accumulate(r.fold_f1.begin(), r.fold_f1.end(), 0.0) /
                static_cast<double>(r.fold_f1.size());
  double var = 0;
  for (double f : r.fold_f1) var += (f - mean) * (f - mean);
  var /= static_cast<double>(r.fold_f1.size());
  r.f1_mean = mean;
  r.f1_stderr = std::sqrt(var) / std::sqrt(static_cast<double>(folds - 1));
  if (r.pooled.tp + r.pooled.fn == 0 && r.warning.empty()) {
    r.warning = "evaluation folds have no positive pairs; recall treated as 0";
  }
  return r;
}

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw Error("train: lr must be non-negative");
  if (!(grad_clip > 0)) throw Error("train: grad_clip must be positive");
  if (batch_size < 1) throw Error("train: batch_size must be at least 1");
  if (!(focal_gamma >= 0)) throw Error("train: focal_gamma must be non-negative");
  if (num_memory < 1) throw Error("train: num_memory must be at least 1");
  if (!(eps_bt_stop >= 0 && eps_bt_stop <= 1)) {
    throw Error("train: eps_bt_stop must lie in [0, 1]");
  }
  if (t_max < 1) throw Error("train: t_max must be at least 1");
  if (max_steps < 0) throw Error("train: max_steps must be non-negative");
  if (eval_every < 1) throw Error("train: eval_every must be at least 1");
  if (early_stop_metric != "val_f1") {
    throw Error("train: unsupported early_stop_metric '" + early_stop_metric + "'");
  }
  if (starts_per_example < 0) throw Error("train: starts_per_example must be >= 0");
  if (!(init_beta > 0)) throw Error("train: init_beta must be positive");
  if (rollouts < 2) throw Error("train: rollouts must be at least 2");
  if (workers < 1) throw Error("train: workers must be at least 1");
}

TrainConfig TrainConfig::from_config(const Config& c) {
  TrainConfig t;
  t.lr = c.get_double("train.lr", t.lr);
  t.grad_clip = c.get_double("train.grad_clip", t.grad_clip);
  t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
  t.focal_gamma = c.get_double("train.focal_gamma", t.focal_gamma);
  t.num_memory = static_cast<int>(c.get_int("train.num_memory", t.num_memory));
  t.eps_bt_stop = c.get_double("train.eps_bt_stop", t.eps_bt_stop);
  t.t_max = static_cast<int>(c.get_int("train.t_max", t.t_max));
  t.max_steps = static_cast<int>(c.get_int("train.max_steps", t.max_steps));
  t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", static_cast<std::int64_t>(t.seed)));
  t.eval_every = static_cast<int>(c.get_int("train.eval_every", t.eval_every));
  t.early_stop_metric = c.get_string("train.early_stop_metric", t.early_stop_metric);
  t.starts_per_example =
      static_cast<int>(c.get_int("train.starts_per_example", t.starts_per_example));
  t.init_beta = c.get_double("train.init_beta", t.init_beta);
  t.log_form = c.get_bool("train.log_form", t.log_form);
  t.patience = static_cast<int>(c.get_int("train.patience", t.patience));
  t.target_val_f1 = c.get_double("train.target_val_f1", t.target_val_f1);
  t.time_budget_s = c.get_double("train.time_budget_s", t.time_budget_s);
  t.val_limit = static_cast<int>(c.get_int("train.val_limit", t.val_limit));
  t.workers = static_cast<int>(c.get_int("train.workers", t.workers));
  t.rollouts = static_cast<int>(c.get_int("train.rollouts", t.rollouts));
  t.validate();
  return t;
}

ParamLayout python_layout(int num_memory) {
  return ParamLayout(python::python_schema(), num_memory);
}

AutomatonParams initial_params(const ParamLayout& layout,
                               const TrainConfig& cfg) {
  SeededRng rng = SeededRng(cfg.seed).split(0);
  AutomatonParams p = init_params(rng, layout, cfg.init_beta, cfg.log_form);
  p.eps_bt_stop = cfg.eps_bt_stop;
  p.t_max = cfg.t_max;
  p.z0 = 0;
  return p;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<PomdpInstance> encode_all(const std::vector<ProgramExample>& data,
                                      int workers) {
  return parallel_map<PomdpInstance>(data.size(), workers, [&](std::size_t i) {
    return python::encode_program(data[i].encoded);
  });
}

// Up to k of the sources, drawn without replacement and kept sorted.
std::vector<int> subsample(std::vector<int> sources, int k, SeededRng& rng) {
  if (k <= 0 || static_cast<std::size_t>(k) >= sources.size()) return sources;
  for (int i = 0; i < k; ++i) {
    std::size_t j = i + rng.below(sources.size() - i);
    std::swap(sources[i], sources[j]);
  }
  sources.resize(k);
  std::sort(sources.begin(), sources.end());
  return sources;
}

// Batch for a step: sorted draws with replacement from a per-step stream.
std::vector<std::size_t> batch_for_step(std::size_t n, int batch_size,
                                        SeededRng rng) {
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.below(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::vector<int>> targets_by_start(const EdgeSet& edges,
                                               const std::vector<int>& starts) {
  std::vector<std::vector<int>> out(starts.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (auto it = edges.lower_bound({starts[s], -1});
         it != edges.end() && it->first == starts[s]; ++it) {
      out[s].push_back(it->second);
    }
  }
  return out;
}

struct Validator {
  const std::vector<ProgramExample>& data;
  EdgeKind kind;
  const ParamLayout& layout;
  int workers;

  double f1(const AutomatonParams& params) const {
    auto scored = score_dataset(data, kind, layout, params, workers);
    std::vector<std::size_t> all(scored.size());
    std::iota(all.begin(), all.end(), 0);
    return confusion_at(scored, all, best_threshold(scored, all)).f1();
  }
};

std::vector<ProgramExample> head(const std::vector<ProgramExample>& v, int limit) {
  if (limit <= 0 || static_cast<std::size_t>(limit) >= v.size()) return v;
  return {v.begin(), v.begin() + limit};
}

// Shared driver: `step_fn` returns the step's loss and fills the gradient
// of that loss (descent direction).
template <typename StepFn>
TrainResult run_training(const std::vector<ProgramExample>& train,
                         const std::vector<ProgramExample>& val_full,
                         EdgeKind kind, const TrainConfig& cfg,
                         const LogFn& on_log, StepFn&& step_fn) {
  cfg.validate();
  if (train.empty()) throw Error("training: dataset is empty");
  if (val_full.empty()) throw Error("training: validation set is empty");
  auto t0 = std::chrono::steady_clock::now();
  ParamLayout layout = python_layout(cfg.num_memory);
  AutomatonParams params = initial_params(layout, cfg);
  auto val = head(val_full, cfg.val_limit);
  Validator validator{val, kind, layout, cfg.workers};
  AdamState adam = AdamState::create(params.theta.size(), cfg.lr);

  TrainResult result;
  result.params = params;
  result.best_val_f1 = validator.f1(params);
  result.best_step = 0;
  LogRow first{0, std::numeric_limits<double>::quiet_NaN(), result.best_val_f1,
               seconds_since(t0)};
  result.log.push_back(first);
  if (on_log) on_log(first);

  SeededRng root(cfg.seed);
  double loss_sum = 0;
  int loss_count = 0, stale = 0;
  std::vector<double> grad;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    double loss = step_fn(params, layout, root.split(step), grad);
    if (!std::isfinite(loss)) {
      throw Error("training diverged at step " + std::to_string(step) +
                  " (loss is not finite)");
    }
    clip_global_norm(grad, cfg.grad_clip);
    adam_step(params.theta, grad, adam);
    loss_sum += loss;
    ++loss_count;
    result.steps_run = step;

    bool out_of_time =
        cfg.time_budget_s > 0 && seconds_since(t0) > cfg.time_budget_s;
    if (step % cfg.eval_every == 0 || step == cfg.max_steps || out_of_time) {
      LogRow row{step, loss_sum / loss_count, validator.f1(params),
                 seconds_since(t0)};
      loss_sum = 0;
      loss_count = 0;
      result.log.push_back(row);
      if (on_log) on_log(row);
      if (row.val_f1 > result.best_val_f1) {
        result.best_val_f1 = row.val_f1;
        result.best_step = step;
        result.params = params;
        stale = 0;
      } else {
        ++stale;
      }
      if (result.best_val_f1 >= cfg.target_val_f1) break;
      if (cfg.patience > 0 && stale >= cfg.patience) break;
    }
    if (out_of_time) break;
  }
  return result;
}

}  // namespace

ScoredExample score_example(const ProgramExample& ex, const PomdpInstance& inst,
                            EdgeKind kind, const ParamLayout& layout,
                            const AutomatonParams& params,
                            const Policy& policy) {
  std::vector<int> sources = python::edge_sources(ex.ast, kind);
  ScoredExample out;
  if (sources.empty()) return out;
  auto dist = solve_absorbing(inst, layout, policy, params.z0, params.t_max, sources);
  auto adj = derived_adjacency(dist, params);
  const EdgeSet& targets = ex.targets(kind);
  for (int s : sources) {
    for (int v = 0; v < inst.num_nodes; ++v) {
      out.scores.push_back(adj.a(s, v));
      out.labels.push_back(targets.count({s, v}) ? 1 : 0);
    }
  }
  return out;
}

std::vector<ScoredExample> score_dataset(const std::vector<ProgramExample>& data,
                                         EdgeKind kind, const ParamLayout& layout,
                                         const AutomatonParams& params,
                                         int workers) {
  params.validate(layout);
  Policy policy = normalize_policy(layout, params);
  return parallel_map<ScoredExample>(data.size(), workers, [&](std::size_t i) {
    PomdpInstance inst = python::encode_program(data[i].encoded);
    return score_example(data[i], inst, kind, layout, params, policy);
  });
}

TrainResult train_edge_classifier(const std::vector<ProgramExample>& train,
                                  const std::vector<ProgramExample>& val,
                                  EdgeKind kind, const TrainConfig& cfg,
                                  const LogFn& on_log) {
  auto instances = encode_all(train, cfg.workers);
  auto step_fn = [&](const AutomatonParams& params, const ParamLayout& layout,
                     SeededRng rng, std::vector<double>& grad) {
    Policy policy = normalize_policy(layout, params);
    auto batch = batch_for_step(train.size(), cfg.batch_size, rng.split(0));
    struct Part {
      double loss = 0;
      std::vector<double> dpi;
    };
    auto parts = parallel_map<Part>(batch.size(), cfg.workers, [&](std::size_t b) {
      const ProgramExample& ex = train[batch[b]];
      const PomdpInstance& inst = instances[batch[b]];
      SeededRng local = rng.split(b + 1);
      auto starts = subsample(python::edge_sources(ex.ast, kind),
                              cfg.starts_per_example, local);
      Part part;
      if (starts.empty()) return part;
      auto dist = solve_absorbing(inst, layout, policy, params.z0, params.t_max, starts);
      auto adj = derived_adjacency(dist, params);
      auto focal = focal_loss(adj.a, starts, ex.targets(kind), cfg.focal_gamma);
      // Mean over scored rows, then over the batch.
      double scale = 1.0 / (static_cast<double>(starts.size()) * batch.size());
      for (double& g : focal.grad.data()) g *= scale;
      auto back = derived_adjacency_vjp(dist, params, focal.grad);
      part.loss = focal.loss * scale;
      part.dpi = backward_absorbing_policy(inst, layout, policy, dist, back.dprobs);
      return part;
    });
    std::vector<double> dpi(layout.size(), 0.0);
    double loss = 0;
    for (const Part& p : parts) {
      loss += p.loss;
      for (std::size_t i = 0; i < p.dpi.size(); ++i) dpi[i] += p.dpi[i];
    }
    grad = normalize_policy_vjp(layout, params, dpi);
    return loss;
  };
  return run_training(train, val, kind, cfg, on_log, step_fn);
}

ReinforceEstimate reinforce_gradient(const PomdpInstance& inst,
                                     const ParamLayout& layout,
                                     const AutomatonParams& params,
                                     const Policy& policy,
                                     const std::vector<int>& starts,
                                     const std::vector<std::vector<int>>& targets,
                                     int rollouts, SeededRng& rng) {
  if (rollouts < 2) throw Error("reinforce: need at least two rollouts");
  if (targets.size() != starts.size()) {
    throw Error("reinforce: one target list per start is required");
  }
  const int nz = layout.num_memory();
  std::vector<double> dpi(layout.size(), 0.0);
  std::vector<std::vector<std::size_t>> taken(rollouts);
  std::vector<double> reward(rollouts);
  double total_reward = 0;
  std::vector<double> gamma_weights(inst.num_gamma);

  for (std::size_t s = 0; s < starts.size(); ++s) {
    int n0 = starts[s];
    for (int k = 0; k < rollouts; ++k) {
      taken[k].clear();
      int x = inst.initial_state[n0], z = params.z0, moves = 0;
      double r = targets[s].empty() ? 1.0 : 0.0;  // if cut off or stopped
      while (true) {
        int type = inst.state_type[x];
        int slot = 0;
        if (inst.dynamic_slot[x] >= 0) {
          for (int g = 0; g < inst.num_gamma; ++g) {
            gamma_weights[g] = inst.c(inst.dynamic_slot[x], n0, g);
          }
          slot = static_cast<int>(rng.categorical(gamma_weights));
        }
        std::size_t base = layout.group_offset(type, inst.state_obs[x], slot, z);
        std::size_t size = static_cast<std::size_t>(layout.num_actions(type)) * nz;
        std::size_t pick = rng.categorical(
            std::span<const double>(policy.pi.data() + base, size));
        taken[k].push_back(base + pick);
        int action = static_cast<int>(pick) / nz;
        int z_next = static_cast<int>(pick) % nz;
        int moves_here = layout.num_moves(type);
        if (action < moves_here) {
          if (moves == params.t_max) break;
          ++moves;
          int row = inst.move_row[x] + action;
          std::span<const double> probs(inst.succ_prob.data() + inst.move_begin[row],
                                        inst.move_begin[row + 1] - inst.move_begin[row]);
          x = inst.succ_state[inst.move_begin[row] + rng.categorical(probs)];
          z = z_next;
          continue;
        }
        Halt h = static_cast<Halt>(action - moves_here);
        if (h == Halt::kBacktrack) {
          if (moves == params.t_max) break;
          ++moves;
          x = inst.initial_state[n0];
          z = params.z0;
          continue;
        }
        if (h == Halt::kAddEdge) {
          int node = inst.state_node[x];
          r = std::find(targets[s].begin(), targets[s].end(), node) != targets[s].end()
                  ? 1.0
                  : 0.0;
        }
        break;
      }
      reward[k] = r;
    }
    double sum = std::accumulate(reward.begin(), reward.end(), 0.0);
    total_reward += sum;
    for (int k = 0; k < rollouts; ++k) {
      double baseline = (sum - reward[k]) / (rollouts - 1);
      double adv = (reward[k] - baseline) / rollouts;
      if (adv == 0) continue;
      for (std::size_t e : taken[k]) dpi[e] += adv / policy.pi[e];
    }
  }
  ReinforceEstimate out;
  out.rollouts = static_cast<long>(starts.size()) * rollouts;
  out.mean_reward = out.rollouts ? total_reward / out.rollouts : 0.0;
  out.grad = normalize_policy_vjp(layout, params, dpi);
  return out;
}

double expected_reward(const PomdpInstance& inst, const ParamLayout& layout,
                       const AutomatonParams& params, const Policy& policy,
                       const std::vector<int>& starts,
                       const std::vector<std::vector<int>>& targets) {
  if (starts.empty()) return 0;
  auto dist = solve_absorbing(inst, layout, policy, params.z0, params.t_max, starts);
  auto adj = derived_adjacency(dist, params);
  double total = 0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    double row = 0, hit = 0;
    for (int v = 0; v < inst.num_nodes; ++v) row += adj.a_hat(starts[s], v);
    for (int v : targets[s]) hit += adj.a_hat(starts[s], v);
    total += targets[s].empty() ? 1.0 - row : hit;
  }
  return total;
}

double dataset_reward(const std::vector<ProgramExample>& data, EdgeKind kind,
                      const ParamLayout& layout, const AutomatonParams& params,
                      int workers) {
  Policy policy = normalize_policy(layout, params);
  struct Part {
    double reward = 0;
    long starts = 0;
  };
  auto parts = parallel_map<Part>(data.size(), workers, [&](std::size_t i) {
    PomdpInstance inst = python::encode_program(data[i].encoded);
    auto starts = python::edge_sources(data[i].ast, kind);
    auto targets = targets_by_start(data[i].targets(kind), starts);
    return Part{expected_reward(inst, layout, params, policy, starts, targets),
                static_cast<long>(starts.size())};
  });
  double total = 0;
  long count = 0;
  for (const Part& p : parts) {
    total += p.reward;
    count += p.starts;
  }
  return count ? total / count : 0.0;
}

TrainResult reinforce_ablation(const std::vector<ProgramExample>& train,
                               const std::vector<ProgramExample>& val,
                               EdgeKind kind, const TrainConfig& cfg,
                               const LogFn& on_log) {
  auto instances = encode_all(train, cfg.workers);
  auto step_fn = [&](const AutomatonParams& params, const ParamLayout& layout,
                     SeededRng rng, std::vector<double>& grad) {
    Policy policy = normalize_policy(layout, params);
    auto batch = batch_for_step(train.size(), cfg.batch_size, rng.split(0));
    auto parts = parallel_map<ReinforceEstimate>(
        batch.size(), cfg.workers, [&](std::size_t b) {
          const ProgramExample& ex = train[batch[b]];
          SeededRng local = rng.split(b + 1);
          auto starts = subsample(python::edge_sources(ex.ast, kind),
                                  cfg.starts_per_example, local);
          auto targets = targets_by_start(ex.targets(kind), starts);
          return reinforce_gradient(instances[batch[b]], layout, params, policy,
                                    starts, targets, cfg.rollouts, local);
        });
    grad.assign(layout.size(), 0.0);
    double reward = 0;
    long rollouts = 0;
    for (const auto& p : parts) {
      reward += p.mean_reward * p.rollouts;
      rollouts += p.rollouts;
      // Ascent on reward is descent on its negation; average over starts.
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= p.grad[i];
    }
    long starts = rollouts / cfg.rollouts;
    if (starts > 0) {
      for (double& g : grad) g /= static_cast<double>(starts);
    }
    return rollouts ? -reward / rollouts : 0.0;
  };
  return run_training(train, val, kind, cfg, on_log, step_fn);
}

void write_log_csv(const std::string& path, const std::vector<LogRow>& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write log " + path);
  out << "step,loss,val_f1,wallclock\n";
  out.precision(10);
  for (const LogRow& r : log) {
    out << r.step << ',';
    if (std::isfinite(r.loss)) out << r.loss;
    out << ',';
    if (std::isfinite(r.val_f1)) out << r.val_f1;
    out << ',' << r.wallclock << '\n';
  }
}

}  // namespace gfsa
