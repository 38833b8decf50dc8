// Copyright 2026 The mtdskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTDSKIT_PARALLEL_HPP
#define MTDSKIT_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace mtdskit {

/// Worker cap: the MTDS_THREADS environment variable if set (>= 1),
/// otherwise the hardware concurrency.
int max_threads();

namespace detail {
inline thread_local bool in_parallel_worker = false;
}

/// Runs fn(i) for i in [0, n). Iterations must write only to slots owned by
/// their index; reductions are the caller's job and should run in fixed index
/// order afterwards so results do not depend on the thread schedule.
/// Nested calls degrade to a serial loop.
template <class F>
void parallel_for(std::int64_t n, F&& fn) {
  const int workers = detail::in_parallel_worker ? 1 : max_threads();
  if (n <= 1 || workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::int64_t chunks = std::min<std::int64_t>(workers, n);
  const std::int64_t chunk = (n + chunks - 1) / chunks;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(chunks));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t begin = c * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, begin, end] {
      detail::in_parallel_worker = true;
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
      detail::in_parallel_worker = false;
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mtdskit

#endif  // MTDSKIT_PARALLEL_HPP
