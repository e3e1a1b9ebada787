#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace pedintent {

// Worker count for data-parallel kernels. PEDINTENT_THREADS overrides
// hardware concurrency. Work is always split into disjoint index ranges and
// every reduction stays sequential within one range, so results are bitwise
// identical for any thread count.
inline int thread_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("PEDINTENT_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return std::min(v, 64);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(std::min(hc, 16u));
  }();
  return cached;
}

// Runs fn(begin, end) over [0, n) on up to thread_count() workers. `grain` is
// the minimum number of items worth giving one worker; small jobs run inline.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t grain, Fn&& fn) {
  if (n == 0) return;
  std::size_t workers = static_cast<std::size_t>(thread_count());
  if (grain > 0) workers = std::min(workers, std::max<std::size_t>(1, n / grain));
  workers = std::min(workers, n);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pedintent
