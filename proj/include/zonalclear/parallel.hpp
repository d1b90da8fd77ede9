#pragma once

#include <cstddef>
#include <functional>

namespace zc {

/// Worker count: ZC_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. The first
/// exception thrown by fn is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace zc
