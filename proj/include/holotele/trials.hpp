#pragma once

// Deterministic parallel trial harness. Trials are grouped into fixed-size
// chunks; each chunk is reduced into its own accumulator and the chunk
// results are merged in chunk order. The floating-point result therefore
// depends only on (trials, chunk size), never on the thread count or on
// scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace holotele {

inline constexpr std::size_t kTrialChunk = 32;

inline unsigned default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// `per_trial(trial_index, acc)` adds one trial into `acc`; `Acc` must provide
/// `merge(const Acc&)`. `empty` is copied to seed every chunk.
template <class Acc, class Fn>
Acc reduce_trials(std::uint64_t trials, const Acc& empty, Fn&& per_trial, unsigned threads = 0,
                  std::size_t chunk = kTrialChunk) {
  const std::size_t n_chunks = static_cast<std::size_t>((trials + chunk - 1) / chunk);
  std::vector<std::optional<Acc>> partial(n_chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        Acc acc = empty;
        const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
        const std::uint64_t end = std::min<std::uint64_t>(trials, begin + chunk);
        for (std::uint64_t t = begin; t < end; ++t) per_trial(t, acc);
        partial[c].emplace(std::move(acc));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    }
  };

  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n_chunks)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = empty;
  for (auto& p : partial) total.merge(*p);
  return total;
}

} // namespace holotele
