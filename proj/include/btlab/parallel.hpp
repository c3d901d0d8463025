#pragma once

#include <cstddef>
#include <functional>

namespace btlab {

/// Worker count for parallel_for; 0 selects the hardware concurrency.
void set_thread_count(int k);
int thread_count();

/// Runs body(i) for i < n. Each index is handled by exactly one worker, so
/// results written to slot i are identical for any thread count. The first
/// exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace btlab
