#include "mvblow/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mvblow {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MVBLOW_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void parallel_for_chunks(
    std::size_t n, int threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t nchunks = kFixedChunks < n ? kFixedChunks : n;
  auto bounds = [&](std::size_t c) {
    std::size_t lo = n * c / nchunks;
    std::size_t hi = n * (c + 1) / nchunks;
    return std::pair<std::size_t, std::size_t>(lo, hi);
  };
  if (threads <= 1) {
    for (std::size_t c = 0; c < nchunks; ++c) {
      auto [lo, hi] = bounds(c);
      fn(c, lo, hi);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      auto [lo, hi] = bounds(c);
      fn(c, lo, hi);
    }
  };
  std::vector<std::thread> pool;
  int nw = threads < static_cast<int>(nchunks) ? threads : static_cast<int>(nchunks);
  pool.reserve(nw - 1);
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace mvblow
