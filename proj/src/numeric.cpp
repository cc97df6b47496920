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

#include "gfsa/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gfsa {

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void check_groups(std::size_t n, std::span<const IndexGroup> groups) {
  std::vector<char> seen(n, 0);
  for (const IndexGroup& g : groups) {
    if (g.size == 0) throw Error("softmax_over_groups: empty group");
    if (g.begin + g.size > n) {
      throw Error("softmax_over_groups: group exceeds vector length");
    }
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) {
      if (seen[i]) throw Error("softmax_over_groups: overlapping groups");
      seen[i] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error("softmax_over_groups: index not covered by any group");
  }
}

}  // namespace

std::vector<double> softmax_over_groups(std::span<const double> logits,
                                        std::span<const IndexGroup> groups) {
  check_groups(logits.size(), groups);
  std::vector<double> out(logits.size());
  for (const IndexGroup& g : groups) {
    auto in = logits.subspan(g.begin, g.size);
    double max = *std::max_element(in.begin(), in.end());
    double total = 0;
    for (std::size_t i = 0; i < g.size; ++i) {
      out[g.begin + i] = std::exp(in[i] - max);
      total += out[g.begin + i];
    }
    for (std::size_t i = 0; i < g.size; ++i) out[g.begin + i] /= total;
  }
  return out;
}

std::vector<double> softmax_over_groups_vjp(std::span<const double> probs,
                                            std::span<const double> cotangent,
                                            std::span<const IndexGroup> groups) {
  std::vector<double> out(probs.size());
  for (const IndexGroup& g : groups) {
    double dot = 0;
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) {
      dot += probs[i] * cotangent[i];
    }
    for (std::size_t i = g.begin; i < g.begin + g.size; ++i) {
      out[i] = probs[i] * (cotangent[i] - dot);
    }
  }
  return out;
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  double max = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(max)) return max;
  double total = 0;
  for (double v : values) total += std::exp(v - max);
  return max + std::log(total);
}

AdamState AdamState::create(std::size_t num_params, double lr) {
  AdamState state;
  state.first_moment.assign(num_params, 0.0);
  state.second_moment.assign(num_params, 0.0);
  state.lr = lr;
  return state;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state) {
  if (grads.size() != params.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error("adam_step: shape mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw Error("adam_step: non-finite gradient at parameter " +
                  std::to_string(i));
    }
  }
  state.step += 1;
  double t = static_cast<double>(state.step);
  double correction1 = 1.0 - std::pow(state.beta1, t);
  double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    double m_hat = m / correction1;
    double v_hat = v / correction2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0;
  for (double g : grads) sq += g * g;
  double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

std::vector<double> central_fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h) {
  if (!(h > 0)) throw Error("central_fd_gradient: step must be positive");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double saved = p[i];
    p[i] = saved + h;
    double plus = f(p);
    p[i] = saved - h;
    double minus = f(p);
    p[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error("central_fd_gradient: non-finite function value at index " +
                  std::to_string(i));
    }
    grad[i] = (plus - minus) / (2 * h);
  }
  return grad;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw Error("SeededRng::below: empty range");
  // Rejection keeps the result exactly uniform.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double SeededRng::normal() {
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::gamma(double shape) {
  if (!(shape > 0)) throw Error("SeededRng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape + 1 and correct with U^(1/shape).
    double u = 1.0 - uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia and Tsang.
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

std::vector<double> SeededRng::dirichlet(std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  double total = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma(alpha[i]);
    total += out[i];
  }
  if (total <= 0) {
    // Every component underflowed; fall back to the largest concentration.
    std::size_t best = static_cast<std::size_t>(
        std::max_element(alpha.begin(), alpha.end()) - alpha.begin());
    std::fill(out.begin(), out.end(), 0.0);
    out[best] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t SeededRng::categorical(std::span<const double> weights) {
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0)) throw Error("SeededRng::categorical: no positive weight");
  double r = uniform() * total;
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last_positive = i;
    if (r < acc) return i;
  }
  return last_positive;
}

SeededRng SeededRng::split(std::uint64_t stream) const {
  return SeededRng(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ULL)) ^
                   mix64(counter_));
}

}  // namespace gfsa
