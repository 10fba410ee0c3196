#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cfrank {

// Splits [0, n) into `blocks` contiguous ranges and runs
// fn(block, begin, end) for each, one std::thread per block when blocks > 1.
// Block boundaries depend only on (n, blocks), so a caller that merges per-block
// results in block order gets identical output for a fixed thread count.
template <class Fn>
void parallel_blocks(std::size_t n, std::size_t blocks, Fn&& fn) {
  blocks = std::max<std::size_t>(1, std::min(blocks, std::max<std::size_t>(n, 1)));
  auto bounds = [&](std::size_t b) { return n * b / blocks; };
  if (blocks == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(blocks - 1);
  for (std::size_t b = 1; b < blocks; ++b)
    pool.emplace_back([&, b] { fn(b, bounds(b), bounds(b + 1)); });
  fn(std::size_t{0}, bounds(0), bounds(1));
  for (auto& t : pool) t.join();
}

}  // namespace cfrank
