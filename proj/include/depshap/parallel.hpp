#pragma once

#include <cstddef>
#include <functional>

namespace depshap {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items are
// claimed dynamically; the exception from the lowest failing index is
// rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Worker count from DEPSHAP_THREADS, else hardware concurrency (at least 1).
int default_thread_count();

}  // namespace depshap
