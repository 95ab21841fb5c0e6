#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace agb {

namespace detail {
inline std::atomic<unsigned>& thread_limit_slot() {
  static std::atomic<unsigned> limit{0};
  return limit;
}
}  // namespace detail

/// Caps worker parallelism for every data-parallel kernel. 0 means "use the
/// hardware concurrency". Results never depend on this value.
inline void set_thread_limit(unsigned n) { detail::thread_limit_slot().store(n); }

inline unsigned thread_limit() {
  unsigned n = detail::thread_limit_slot().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(i) for i in [0, n) over contiguous static chunks. Each index is
/// visited exactly once; callers write to disjoint output slots so the result
/// is independent of the worker count. The exception of the lowest failing
/// chunk is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(thread_limit(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace agb
