#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gdgp {

// Global worker cap, set once by the CLI (--threads). Defaults to the
// hardware count. Results must never depend on this value: parallel_for
// assigns each index a fixed slot and callers reduce sequentially.
inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> n{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  return n;
}

inline void set_max_threads(int n) { max_threads_slot().store(n < 1 ? 1 : n); }
inline int max_threads() { return max_threads_slot().load(); }

// Runs body(i) for i in [0, n). Static block partition; exceptions are
// captured and rethrown on the calling thread.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& body) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(max_threads(), n));
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::ptrdiff_t lo = t * chunk;
    const std::ptrdiff_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::ptrdiff_t i = lo; i < hi && !failed.load(std::memory_order_relaxed); ++i) {
          body(i);
        }
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gdgp
