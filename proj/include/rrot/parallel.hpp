#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rrot {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work is handed
/// out dynamically; the first exception thrown is rethrown on the caller.
template <class Fn>
void parallel_for(long count, int workers, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<long>(count, 1))));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rrot
