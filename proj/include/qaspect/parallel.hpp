#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qaspect {

/// Runs fn(i) for i in [0, count) across worker threads. Work is split into
/// contiguous chunks so callers can write results into index-addressed slots;
/// output is then independent of the thread count. The first exception thrown
/// by any worker is rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t count, F&& fn, unsigned requested_threads = 0) {
  if (count == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  unsigned workers = requested_threads ? requested_threads : (hw ? hw : 1);
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));

  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace qaspect
