#pragma once

#include <cstddef>
#include <functional>

namespace loec {

/// Worker count: LOEC_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n), statically partitioned over worker_count()
/// threads. The first exception thrown by any task is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace loec
