#pragma once

#include <cstddef>
#include <functional>

namespace mvblow {

// Effective worker count: `requested` if positive, else MVBLOW_THREADS from
// the environment, else 1.
int resolve_threads(int requested);

// Runs fn(chunk_index, lo, hi) over a fixed partition of [0, n) into
// kFixedChunks pieces. The partition never depends on the worker count, so
// per-chunk reductions combine to identical results for any thread count.
inline constexpr std::size_t kFixedChunks = 64;

void parallel_for_chunks(
    std::size_t n, int threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace mvblow
