#pragma once

// Minimal fork-join loop.  Work items write to disjoint slots, so results do
// not depend on the schedule.

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cloneforge {

namespace detail {
inline std::atomic<unsigned>& thread_count_ref() {
  static std::atomic<unsigned> n{0};
  return n;
}
}  // namespace detail

/// 0 means one thread per hardware core.
inline void set_thread_count(unsigned n) { detail::thread_count_ref().store(n); }

inline unsigned thread_count() {
  unsigned n = detail::thread_count_ref().load();
  if (n == 0) {
    n = std::max(1U, std::thread::hardware_concurrency());
  }
  return n;
}

/// Calls fn(i) for i in [0, n).  The first exception thrown is rethrown.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
  unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr       error;
  std::mutex               error_mu;
  auto                     body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) {
          error = std::current_exception();
        }
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) {
    pool.emplace_back(body);
  }
  body();
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace cloneforge
