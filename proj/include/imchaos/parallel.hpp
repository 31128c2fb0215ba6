// Replica-parallel execution. Work is partitioned by replica index, each
// replica derives its own RNG stream, and reductions happen on ordered
// buffers, so results do not depend on scheduling.
#pragma once

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace imchaos {

inline int default_workers() {
  if (const char* env = std::getenv("IMCHAOS_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n). fn must only write to state indexed by i.
/// Worker exceptions are captured and rethrown on the calling thread (the one
/// from the lowest worker index wins, so the error is deterministic too).
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(w);
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([t, w, n, &fn, &errors] {
      try {
        // Static block partition keeps the work deterministic per worker count.
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace imchaos
