#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "cmlab/rng.hpp"

namespace cmlab {

/// Replications are grouped in fixed blocks; block b always draws from stream
/// (seed, stream_base + b). Results therefore do not depend on how many
/// workers share the blocks or in which order they finish.
inline constexpr std::size_t kBlockSize = 256;

/// Calls fn(rng, i) for every replication i in [0, n) and stores the results
/// in index order.
template <class T, class Fn>
std::vector<T> replicate(std::size_t n, std::uint64_t seed, std::uint64_t stream_base,
                         unsigned workers, Fn fn) {
  std::vector<T> out(n);
  std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        RngStream rng(seed, stream_base + b);
        std::size_t hi = std::min(n, (b + 1) * kBlockSize);
        for (std::size_t i = b * kBlockSize; i < hi; ++i) out[i] = fn(rng, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    }
  };
  unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cmlab
