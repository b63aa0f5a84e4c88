#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cdid {

namespace detail {
extern thread_local bool t_inside_parallel_region;
}

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_thread_limit(unsigned threads) noexcept;
unsigned thread_limit() noexcept;

// Runs body(i) for i in [0, count). Tasks must write disjoint outputs; the
// first exception thrown by any task is rethrown on the calling thread.
// Nested calls run serially on the calling worker.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  using detail::t_inside_parallel_region;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_limit(), count));
  if (workers <= 1 || t_inside_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    t_inside_parallel_region = true;
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
    t_inside_parallel_region = false;
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cdid
