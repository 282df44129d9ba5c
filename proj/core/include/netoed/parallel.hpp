#pragma once

#include <cstddef>
#include <functional>

namespace netoed {

/// Worker count from NETOED_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into pre-sized slots so the
/// outcome never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace netoed
