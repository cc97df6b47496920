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

#ifndef GFSA_PARALLEL_HPP_
#define GFSA_PARALLEL_HPP_

#include <cstddef>
#include <functional>
#include <vector>

namespace gfsa {

// Default pool size: GFSA_WORKERS if set, else the number of logical cores.
int default_workers();

// Calls fn(i) for i in [0, n) on up to `workers` threads. Work items are
// claimed dynamically, but each result lands in its own slot, so the output
// never depends on scheduling. The first exception (lowest index) is
// rethrown after all threads finish.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, int workers, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace gfsa

#endif  // GFSA_PARALLEL_HPP_
