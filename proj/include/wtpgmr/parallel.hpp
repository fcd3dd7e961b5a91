#pragma once

#include <cstddef>
#include <functional>

namespace wtpgmr {

/// Worker count: TPR_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write results by index so output order never
/// depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = thread_count());

}  // namespace wtpgmr
