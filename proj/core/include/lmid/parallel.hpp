#pragma once

#include <cstddef>
#include <functional>

namespace lmid {

// Process-wide worker cap (the CLI's --threads). 0 means hardware concurrency.
void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) over contiguous chunks of [0, n) on up to `threads`
// workers (0 = max_threads()). Chunk boundaries depend only on n and the
// worker count, and every index is processed exactly once, so callers that
// write disjoint outputs per index get results independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  int threads = 0);

}  // namespace lmid
