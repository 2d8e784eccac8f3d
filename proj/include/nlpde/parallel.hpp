// SPDX-License-Identifier: MIT
/**
 * @file parallel.hpp
 * @brief Deterministic fork-join helper.
 *
 * Work is split into contiguous index ranges assigned statically, and every
 * consumer writes only to slots owned by its own indices.  Because each
 * slot's value is a pure function of its index, the result is bit-identical
 * for any thread count — the property the determinism acceptance criterion
 * checks end to end.
 */
#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nlpde {

/**
 * Invoke `body(begin, end)` over a static partition of [0, n).
 *
 * `threads <= 1` (or a small n) degenerates to a single inline call.  The
 * first exception thrown by any worker is rethrown on the calling thread.
 */
inline void parallel_for_ranges(std::size_t n, int threads,
                                const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  std::size_t k = threads <= 1 ? 1 : static_cast<std::size_t>(threads);
  if (k > n) k = n;
  if (k == 1) {
    body(0, n);
    return;
  }

  const std::size_t chunk = (n + k - 1) / k;
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;

  auto guarded = [&](std::size_t begin, std::size_t end) {
    try {
      body(begin, end);
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> workers;
  workers.reserve(k - 1);
  for (std::size_t w = 1; w < k; ++w) {
    const std::size_t begin = w * chunk;
    if (begin >= n) break;
    const std::size_t end = std::min(n, begin + chunk);
    workers.emplace_back(guarded, begin, end);
  }
  guarded(0, std::min(n, chunk));
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nlpde
