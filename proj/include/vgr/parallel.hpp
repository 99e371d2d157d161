#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace vgr {

/// Worker count for data-parallel kernels: hardware concurrency, bounded by
/// the VGR_THREADS environment variable when set.
inline int default_thread_count() {
  int n = int(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("VGR_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n;
}

/// Runs f(item, worker) for item in [0, n). Items are assigned to workers by
/// item % workers, so a fixed worker count gives a fixed partition.
template <typename F>
void parallel_for(long n, int workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) f(i, 0);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long i = w; i < n; i += workers) f(i, w);
    });
  }
}

}  // namespace vgr
