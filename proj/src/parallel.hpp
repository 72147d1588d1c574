#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace enkf::detail {

// Runs fn(i) for i in [0, count) over contiguous chunks, one per worker.
// The first exception (lowest chunk) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t per = (count + workers - 1) / workers;
  auto run = [&](std::size_t w) {
    const std::size_t first = w * per;
    const std::size_t last = std::min(count, first + per);
    try {
      for (std::size_t i = first; i < last; ++i) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace enkf::detail
