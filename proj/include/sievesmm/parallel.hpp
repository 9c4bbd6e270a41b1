#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sievesmm {

namespace detail {
inline std::atomic<unsigned>& default_threads_storage() {
  static std::atomic<unsigned> n{1};
  return n;
}
} // namespace detail

// Process-wide cap on worker threads (the CLI's --threads flag). 0 means hardware concurrency.
inline void set_default_threads(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  detail::default_threads_storage() = n;
}
inline unsigned default_threads() { return detail::default_threads_storage(); }

// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker and
// results are written by index, so the outcome never depends on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& fn, unsigned threads = 0) {
  if (threads == 0) threads = default_threads();
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

} // namespace sievesmm
