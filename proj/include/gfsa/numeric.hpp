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

#ifndef GFSA_NUMERIC_HPP_
#define GFSA_NUMERIC_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gfsa {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A contiguous group [begin, begin + size) of a flat vector.
struct IndexGroup {
  std::size_t begin = 0;
  std::size_t size = 0;
};

// Softmax applied independently within each group. Groups must cover every
// index exactly once.
std::vector<double> softmax_over_groups(std::span<const double> logits,
                                        std::span<const IndexGroup> groups);

// Pulls a cotangent on softmax outputs back to the logits, group by group.
std::vector<double> softmax_over_groups_vjp(std::span<const double> probs,
                                            std::span<const double> cotangent,
                                            std::span<const IndexGroup> groups);

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

double logsumexp(std::span<const double> values);

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState create(std::size_t num_params, double lr);
};

// One bias-corrected Adam update of `params` in place. Throws if any gradient
// is non-finite, naming the offending index.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state);

// Rescales `grads` so its L2 norm is at most `max_norm`. Returns the norm
// before clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

// Central finite-difference gradient of a scalar function.
std::vector<double> central_fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h);

// Counter-based generator: output i is a pure function of (seed, i), so
// streams reproduce bit-for-bit on every platform. All samplers are written
// here instead of using <random> distributions, whose outputs are
// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);
  // Samples an index with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  // Independent child stream; does not advance this generator.
  SeededRng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x);

// FNV-1a, used for stable content hashes in file headers.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gfsa

#endif  // GFSA_NUMERIC_HPP_
