// SPDX-License-Identifier: Apache-2.0
#include "oric/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace oric {

unsigned worker_count(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ORIC_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // Unparsable values leave the count unchanged.
    }
  }
  return std::max(1u, n);
}

void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t w = std::clamp<std::size_t>(workers, 1, n);
  if (w == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = n * t / w;
    const std::size_t end = n * (t + 1) / w;
    threads.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace oric
