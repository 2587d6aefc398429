#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace conclab {

/// Splits [0, count) into `workers` contiguous blocks and runs fn(begin, end)
/// on each, one thread per block. Block boundaries only depend on count and
/// workers; callers keep per-index work independent so results do not depend
/// on the worker count.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  w = std::min(w, std::max<std::size_t>(1, count));
  if (w == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(w - 1);
  std::size_t chunk = (count + w - 1) / w;
  for (std::size_t t = 1; t < w; ++t) {
    std::size_t begin = std::min(count, t * chunk);
    std::size_t end = std::min(count, begin + chunk);
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(count, chunk));
}

}  // namespace conclab
