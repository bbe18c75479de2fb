// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace oric {

// Worker count: `requested` when non-zero, else hardware concurrency; both
// capped by the ORIC_THREADS environment variable when it is set.
unsigned worker_count(unsigned requested = 0);

// Runs fn(begin, end) over [0, n) split into contiguous, equally sized chunks,
// one per worker. The split depends only on n and the worker count, so results
// written by index are identical for any thread count.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace oric
