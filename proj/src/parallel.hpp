#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace essr::detail {

// Splits [0, count) into contiguous chunks. Workers only touch disjoint
// columns, so the result never depends on the thread count.
template <class Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
  const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(count, 1)));
  if (workers <= 1) {
    fn(std::int64_t{0}, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace essr::detail
