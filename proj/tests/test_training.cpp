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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gfsa/python/dataset.hpp"
#include "gfsa/training.hpp"

using namespace gfsa;
using python::EdgeKind;

namespace {

ScoredExample scored(std::vector<double> s, std::vector<char> l) { return {s, l}; }

std::vector<python::ProgramExample> small_programs(std::uint64_t seed, int count) {
  python::PcfgConfig cfg = python::PcfgConfig::preset("0.5x");
  return python::generate_dataset(cfg, seed, count, 1);
}

TrainConfig tiny_train() {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_steps = 4;
  cfg.eval_every = 2;
  cfg.starts_per_example = 4;
  cfg.num_memory = 2;
  cfg.t_max = 32;
  cfg.lr = 0.05;
  return cfg;
}

// Two generic nodes joined by one edge, without Backtrack, so sampled and
// solved rewards follow the same chain.
struct Bandit {
  GraphSchema schema;
  PomdpInstance inst;
  ParamLayout layout;
};

Bandit bandit() {
  Bandit b;
  b.schema = build_generic_schema({"A", "B"}, {"e"});
  b.schema.allow_backtrack = false;
  TypedGraph g;
  g.node_types = {0, 1};
  g.edges = {{0, 1, 0, -1}};
  b.inst = encode_graph(g, b.schema);
  b.layout = ParamLayout(b.schema, 2);
  return b;
}

}  // namespace

TEST_CASE("focal loss reference values") {
  double g = 0;
  CHECK(focal_term(0.9, true, 2.0, &g) == doctest::Approx(1.0536051565782628e-3).epsilon(1e-12));
  // gamma = 0 is binary cross-entropy.
  for (double a : {0.01, 0.3, 0.5, 0.97}) {
    CHECK(focal_term(a, true, 0.0, nullptr) == doctest::Approx(-std::log(a)).epsilon(1e-14));
    CHECK(focal_term(a, false, 0.0, nullptr) ==
          doctest::Approx(-std::log(1 - a)).epsilon(1e-14));
  }
  CHECK(focal_term(1.0, true, 2.0, &g) < 1e-30);
  CHECK(g == 0);
  CHECK(focal_term(0.0, false, 2.0, &g) < 1e-30);
  CHECK(g == 0);
  // Clamped logs stay finite.
  CHECK(std::isfinite(focal_term(0.0, true, 2.0, nullptr)));
  CHECK(focal_term(0.0, true, 0.0, nullptr) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("focal gradient matches finite differences") {
  for (double gamma : {0.0, 0.5, 2.0, 4.7}) {
    for (double a : {0.02, 0.25, 0.5, 0.8, 0.995}) {
      for (bool pos : {true, false}) {
        double g = 0;
        focal_term(a, pos, gamma, &g);
        double h = 1e-7 * std::min(a, 1 - a);
        double fd = (focal_term(a + h, pos, gamma, nullptr) -
                     focal_term(a - h, pos, gamma, nullptr)) / (2 * h);
        CHECK(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g)));
      }
    }
  }
}

TEST_CASE("focal_loss sums the chosen rows only") {
  DenseMatrix a(3, 3);
  a(0, 1) = 0.9;
  a(0, 2) = 0.2;
  a(2, 0) = 0.6;
  python::EdgeSet targets{{0, 1}, {2, 0}};
  auto r = focal_loss(a, {0}, targets, 2.0);
  double expect = focal_term(0.0, false, 2, nullptr) + focal_term(0.9, true, 2, nullptr) +
                  focal_term(0.2, false, 2, nullptr);
  CHECK(r.loss == doctest::Approx(expect).epsilon(1e-14));
  CHECK(r.grad(2, 0) == 0);
  CHECK(r.grad(0, 1) < 0);
  CHECK(r.grad(0, 2) > 0);
  CHECK_THROWS_AS(focal_loss(a, {0}, targets, -1.0), Error);
}

TEST_CASE("F1 protocol cases") {
  std::vector<ScoredExample> perfect;
  for (int i = 0; i < 10; ++i) perfect.push_back(scored({1, 0, 0, 1}, {1, 0, 0, 1}));
  std::vector<std::size_t> all(10);
  for (std::size_t i = 0; i < 10; ++i) all[i] = i;
  for (double t : {0.01, 0.5, 0.99}) CHECK(confusion_at(perfect, all, t).f1() == 1.0);
  SplitReport r = f1_best_threshold(perfect, 10, "perfect");
  CHECK(r.f1_mean == 1.0);
  CHECK(r.f1_stderr == 0.0);
  CHECK(r.fold_f1.size() == 9);

  std::vector<ScoredExample> zero;
  for (int i = 0; i < 10; ++i) zero.push_back(scored({0, 0, 0}, {1, 0, 0}));
  CHECK(f1_best_threshold(zero).f1_mean < 1.0);
  CHECK(confusion_at(zero, all, 0.5).f1() == 0.0);

  // Positives at 0.9 and 0.7, a negative at 0.5: threshold 0.5 admits one
  // false positive, 0.7 none.
  std::vector<ScoredExample> syn{scored({0.9, 0.7, 0.5, 0.1, 0.1}, {1, 1, 0, 0, 0})};
  CHECK(best_threshold(syn, {0}) == 0.7);
  CHECK(confusion_at(syn, {0}, 0.5).fp == 1);
  CHECK(confusion_at(syn, {0}, 0.7).fp == 0);

  Confusion empty;
  CHECK(empty.f1() == 0.0);
  CHECK(empty.precision() == 0.0);
}

TEST_CASE("threshold selection never looks at the evaluation folds") {
  SeededRng rng(12);
  std::vector<ScoredExample> ex;
  for (int i = 0; i < 40; ++i) {
    ScoredExample e;
    for (int k = 0; k < 6; ++k) {
      char label = rng.uniform() < 0.3;
      e.labels.push_back(label);
      e.scores.push_back(std::clamp(0.6 * label + 0.5 * rng.uniform(), 0.0, 1.0));
    }
    ex.push_back(e);
  }
  SplitReport a = f1_best_threshold(ex, 10);
  auto shuffled = ex;
  // Permute examples 4..39 (folds 1-9) and flip some of their labels.
  for (std::size_t i = 39; i > 4; --i) std::swap(shuffled[i], shuffled[4 + rng.below(i - 3)]);
  for (std::size_t i = 4; i < 40; i += 3) shuffled[i].labels[0] ^= 1;
  SplitReport b = f1_best_threshold(shuffled, 10);
  CHECK(a.threshold == b.threshold);
  CHECK(a.pooled.tp + a.pooled.fn > 0);
}

TEST_CASE("F1 with no positives warns") {
  std::vector<ScoredExample> ex(10, scored({0.2, 0.4}, {0, 0}));
  SplitReport r = f1_best_threshold(ex, 10);
  CHECK(std::isinf(r.threshold));
  CHECK_FALSE(r.warning.empty());
  CHECK(r.f1_mean == 0.0);
  CHECK(r.to_json()["threshold"] == "inf");
  CHECK_THROWS_AS(f1_best_threshold(ex, 11), Error);
}

TEST_CASE("train config from file and validation") {
  Config c = Config::parse("[train]\nlr = 0.002\nbatch_size = 3\nfocal_gamma = 0\n");
  TrainConfig t = TrainConfig::from_config(c);
  CHECK(t.lr == 0.002);
  CHECK(t.batch_size == 3);
  CHECK(t.focal_gamma == 0.0);
  CHECK(t.max_steps == 20000);
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = TrainConfig{};
  bad.focal_gamma = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(TrainConfig::from_config(Config::parse("[train]\nlr = -1\n")), Error);
}

TEST_CASE("lr = 0 leaves parameters unchanged and the loss constant") {
  auto train = small_programs(1, 6);
  auto val = small_programs(2, 4);
  TrainConfig cfg = tiny_train();
  cfg.lr = 0;
  // The same batch every step: one example.
  std::vector<python::ProgramExample> one{train[0]};
  cfg.batch_size = 1;
  cfg.starts_per_example = 0;
  std::vector<double> losses;
  TrainResult r = train_edge_classifier(one, val, EdgeKind::kNextControlFlow, cfg,
                                        [&](const LogRow& row) {
                                          if (std::isfinite(row.loss)) losses.push_back(row.loss);
                                        });
  AutomatonParams init = initial_params(python_layout(cfg.num_memory), cfg);
  CHECK(r.params.theta == init.theta);
  REQUIRE(losses.size() >= 2);
  for (double l : losses) CHECK(l == losses[0]);
  CHECK(r.steps_run == 4);
}

TEST_CASE("training is deterministic per seed") {
  auto train = small_programs(3, 6);
  auto val = small_programs(4, 4);
  TrainConfig cfg = tiny_train();
  TrainResult a = train_edge_classifier(train, val, EdgeKind::kLastRead, cfg);
  TrainResult b = train_edge_classifier(train, val, EdgeKind::kLastRead, cfg);
  CHECK(a.params.theta == b.params.theta);
  CHECK(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(std::isnan(a.log[i].loss) == std::isnan(b.log[i].loss));
    if (!std::isnan(a.log[i].loss)) CHECK(a.log[i].loss == b.log[i].loss);
  }
  cfg.seed = 1;
  TrainResult c = train_edge_classifier(train, val, EdgeKind::kLastRead, cfg);
  CHECK(c.params.theta != a.params.theta);
  // Adam moves parameters away from the start.
  CHECK(a.params.theta != initial_params(python_layout(cfg.num_memory), cfg).theta);
}

TEST_CASE("empty dataset is rejected") {
  std::vector<python::ProgramExample> none;
  auto val = small_programs(4, 2);
  CHECK_THROWS_AS(train_edge_classifier(none, val, EdgeKind::kLastRead, tiny_train()), Error);
}

TEST_CASE("training log CSV") {
  auto path = std::filesystem::temp_directory_path() / "gfsa_log_test.csv";
  write_log_csv(path.string(), {{0, std::nan(""), 0.5, 0.1}, {10, 0.25, std::nan(""), 1.5}});
  std::ifstream in(path);
  std::string l0, l1, l2;
  std::getline(in, l0);
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l0 == "step,loss,val_f1,wallclock");
  CHECK(l1 == "0,,0.5,0.1");
  CHECK(l2 == "10,0.25,,1.5");
  std::filesystem::remove(path);
}

TEST_CASE("REINFORCE: a deterministic optimal policy has zero gradient") {
  Bandit b = bandit();
  AutomatonParams p;
  p.num_memory = 2;
  p.theta.assign(b.layout.size(), -1000.0);
  // At A (obs TRUE, z = 0) take e into memory 0; at B (TRUE, z = 0) add the edge.
  p.theta[b.layout.entry(0, 0, 0, 0, 0, 0)] = 0;
  p.theta[b.layout.entry(1, 0, 0, 0, b.layout.halt_action(1, Halt::kAddEdge), 0)] = 0;
  Policy pol = normalize_policy(b.layout, p);
  SeededRng rng(1);
  auto est = reinforce_gradient(b.inst, b.layout, p, pol, {0}, {{1}}, 20, rng);
  CHECK(est.mean_reward == 1.0);
  for (double g : est.grad) CHECK(g == 0.0);
  CHECK(expected_reward(b.inst, b.layout, p, pol, {0}, {{1}}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("REINFORCE: a cut-off rollout is scored by whether targets exist") {
  Bandit b = bandit();
  AutomatonParams p;
  p.num_memory = 2;
  p.t_max = 5;
  p.theta.assign(b.layout.size(), -1000.0);
  // Always move along e; from B the move has no successor and loops.
  for (int type = 0; type < 2; ++type) {
    for (int obs = 0; obs < 2; ++obs) {
      for (int z = 0; z < 2; ++z) p.theta[b.layout.entry(type, obs, 0, z, 0, 0)] = 0;
    }
  }
  Policy pol = normalize_policy(b.layout, p);
  SeededRng rng(2);
  auto with_targets = reinforce_gradient(b.inst, b.layout, p, pol, {0}, {{1}}, 4, rng);
  CHECK(with_targets.mean_reward == 0.0);
  auto without = reinforce_gradient(b.inst, b.layout, p, pol, {0}, {{}}, 4, rng);
  CHECK(without.mean_reward == 1.0);
  CHECK_THROWS_AS(reinforce_gradient(b.inst, b.layout, p, pol, {0}, {{}}, 1, rng), Error);
  CHECK_THROWS_AS(reinforce_gradient(b.inst, b.layout, p, pol, {0, 1}, {{}}, 4, rng), Error);
}

TEST_CASE("REINFORCE estimate is unbiased on a small instance") {
  Bandit b = bandit();
  SeededRng init(5);
  AutomatonParams p;
  p.num_memory = 2;
  p.t_max = 400;
  p.theta.resize(b.layout.size());
  for (double& t : p.theta) t = init.normal();
  Policy pol = normalize_policy(b.layout, p);
  std::vector<int> starts{0, 1};
  std::vector<std::vector<int>> targets{{1}, {}};

  // Analytic gradient of the summed expected reward.
  auto dist = solve_absorbing(b.inst, b.layout, pol, p.z0, p.t_max, starts);
  std::vector<double> dprobs(dist.probs.size(), 0.0);
  dprobs[dist.prob_index(0, Halt::kAddEdge, 1)] = 1;
  for (int n = 0; n < 2; ++n) dprobs[dist.prob_index(1, Halt::kAddEdge, n)] = -1;
  auto exact = backward_absorbing(b.inst, b.layout, p, pol, dist, dprobs);

  std::vector<double> dir(exact.size());
  for (double& d : dir) d = init.normal();
  const int samples = 4000;
  double sum = 0, sq = 0, sum_e = 0, sq_e = 0;
  SeededRng rng(77);
  for (int i = 0; i < samples; ++i) {
    auto est = reinforce_gradient(b.inst, b.layout, p, pol, starts, targets, 20, rng);
    double x = 0, y = 0;
    for (std::size_t k = 0; k < dir.size(); ++k) {
      x += dir[k] * est.grad[k];
      y += exact[k] * est.grad[k];
    }
    sum += x;
    sq += x * x;
    sum_e += y;
    sq_e += y * y;
  }
  double target = 0, target_e = 0;
  for (std::size_t k = 0; k < dir.size(); ++k) {
    target += dir[k] * exact[k];
    target_e += exact[k] * exact[k];
  }
  double mean = sum / samples, se = std::sqrt((sq / samples - mean * mean) / samples);
  double mean_e = sum_e / samples,
         se_e = std::sqrt((sq_e / samples - mean_e * mean_e) / samples);
  CHECK(std::abs(mean - target) < 3 * se);
  CHECK(std::abs(mean_e - target_e) < 3 * se_e);
  CHECK(target_e > 0);
}
