#pragma once

// Deterministic index-parallel loop. Worker count comes from INFLAB_THREADS
// (clamped to hardware) and defaults to the hardware concurrency. Each index
// writes only its own slots, so results do not depend on the thread count.

#include <cstdlib>
#include <thread>
#include <vector>

namespace inflab {

inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("INFLAB_THREADS")) {
    long req = std::strtol(env, nullptr, 10);
    if (req >= 1 && req < (long)hw) return (int)req;
    if (req >= (long)hw) return (int)hw;
  }
  return (int)hw;
}

template <class Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  int n = end - begin;
  if (n <= 0) return;
  int workers = worker_count();
  if (workers <= 1 || n < 2 * workers) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn] {
      for (int i = begin + w; i < end; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace inflab
