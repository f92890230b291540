#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace attnconf {

inline std::size_t default_workers() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(k) for every k in [0, n), splitting the range into contiguous
/// chunks over `workers` threads. The first exception (by chunk order) is
/// rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      threads.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t k = begin; k < end; ++k) fn(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// out[k] = fn(in[k]); output order always matches input order.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& in, std::size_t workers, Fn&& fn) {
  using Out = std::decay_t<decltype(fn(in.front()))>;
  std::vector<Out> out(in.size());
  parallel_for(in.size(), workers, [&](std::size_t k) { out[k] = fn(in[k]); });
  return out;
}

}  // namespace attnconf
