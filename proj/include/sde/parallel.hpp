#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sde {

/// Worker count: hardware concurrency by default, overridden by the
/// SDE_ASYMPT_THREADS environment variable, and never above the job
/// count. Results are schedule-independent, so any value is safe.
inline int worker_count(long jobs) {
  long workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("SDE_ASYMPT_THREADS")) {
    const long parsed = std::strtol(cap, nullptr, 10);
    if (parsed >= 1) workers = parsed;
  }
  return static_cast<int>(std::min(workers, std::max<long>(1, jobs)));
}

/// Runs body(i) for i in [0, count) across workers. Each index is
/// claimed exactly once; results must be written to per-index slots so
/// that aggregation order (and output bytes) cannot depend on the
/// schedule. The first exception thrown by a worker is rethrown.
inline void parallel_for(long count, const std::function<void(long)>& body) {
  const int workers = worker_count(count);
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const long i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sde
