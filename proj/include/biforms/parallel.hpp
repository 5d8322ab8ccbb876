#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace biforms {

// Evaluates fn(u) for u in [0, units) on up to `threads` workers and folds the
// per-unit results in unit order, so the value is independent of the thread count.
template <class T, class Fn, class Fold>
T parallel_reduce(std::int64_t units, int threads, T init, Fn fn, Fold fold) {
  std::vector<T> partial(static_cast<std::size_t>(std::max<std::int64_t>(units, 0)));
  const int workers = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(units, 1)));
  if (workers == 1) {
    for (std::int64_t u = 0; u < units; ++u) partial[u] = fn(u);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::int64_t u = w; u < units; u += workers) partial[u] = fn(u);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  T acc = init;
  for (auto& p : partial) acc = fold(acc, p);
  return acc;
}

}  // namespace biforms
