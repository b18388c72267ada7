#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace prosim {

/// Calls fn(i) for every i in [0, count), visiting indices in `order` when it
/// is non-empty (it must then be a permutation of [0, count)). With jobs > 1
/// the calls run on worker threads; fn must write only to slot i of its
/// output. After the first failure no new indices are started, and the
/// exception of the lowest failed index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn,
                  std::span<const std::size_t> order = {}) {
  auto index_at = [&](std::size_t pos) { return order.empty() ? pos : order[pos]; };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t pos = 0; pos < count; ++pos) fn(index_at(pos));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t pos = next.fetch_add(1);
      if (pos >= count) return;
      const std::size_t i = index_at(pos);
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop.store(true);
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  if (failure) std::rethrow_exception(failure);
}

}  // namespace prosim
