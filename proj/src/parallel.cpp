#include "cdid/parallel.hpp"

namespace cdid {

namespace detail {
thread_local bool t_inside_parallel_region = false;
}

namespace {
std::atomic<unsigned> g_thread_limit{0};
}

void set_thread_limit(unsigned threads) noexcept { g_thread_limit.store(threads); }

unsigned thread_limit() noexcept {
  const unsigned limit = g_thread_limit.load();
  if (limit != 0) return limit;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace cdid
