#pragma once

#include <functional>

namespace lassotap {

// Runs body(0..n-1) on up to `workers` threads (0 = hardware concurrency).
// Work items must not share mutable state; the first exception thrown by any
// item is rethrown on the calling thread after all workers finish.
void parallel_for(int n, int workers, const std::function<void(int)>& body);

}  // namespace lassotap
