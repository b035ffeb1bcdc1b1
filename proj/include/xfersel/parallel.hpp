#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace xfersel {

/// Worker bound for data-parallel loops. 0 means hardware concurrency.
struct parallelism {
  unsigned threads = 1;

  [[nodiscard]] unsigned resolved() const noexcept {
    if (threads != 0) return threads;
    return std::max(1U, std::thread::hardware_concurrency());
  }
};

/// Runs fn(i) for i in [0, n) over contiguous static chunks. Results must be
/// written to per-index slots; any reduction happens afterwards in index order.
template <typename Fn>
void parallel_for(std::size_t n, parallelism par, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(par.resolved(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          const std::size_t lo = w * chunk;
          const std::size_t hi = std::min(n, lo + chunk);
          for (std::size_t i = lo; i < hi; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace xfersel
