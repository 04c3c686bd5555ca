#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hhj {

/// Runs fn(i) for i in [0, n) on `threads` workers with static contiguous
/// chunks. Callers write to per-index slots so results do not depend on the
/// thread count. The first exception thrown by a worker is rethrown.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const int end = std::min(n, (t + 1) * chunk);
        for (int i = t * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hhj
