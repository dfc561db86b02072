#pragma once

#include <cstddef>
#include <functional>

namespace dpm {

/// Worker count: explicit override if > 0, else DPM_THREADS, else hardware concurrency.
int resolve_thread_count(int requested = 0);

/// Sets the process-wide default used by parallel_for when `threads` is 0.
void set_default_threads(int threads);
int default_threads();

/// Runs body(item, worker) for item in [0, n). Items are claimed dynamically;
/// `worker` is in [0, threads) and identifies per-thread scratch. The first
/// exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t, int)>& body,
                  int threads = 0);

}  // namespace dpm
