#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace vlx {

/// Number of worker threads implied by a requested count: 0 means "use the
/// hardware concurrency", anything else is taken literally.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, n) split into contiguous chunks, one per thread.
/// Each index is processed by exactly one thread in increasing order inside
/// its chunk, and threads write to disjoint data, so results are identical
/// for every thread count.  fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  int workers = resolve_threads(threads);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<int>(std::min<std::size_t>(workers, n));
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vlx
