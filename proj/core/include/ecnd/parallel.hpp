#pragma once

#include <cstddef>
#include <functional>

namespace ecnd {

// Global worker count for parallel_for. 1 (the default until set) runs
// everything on the calling thread. All kernels partition work so results
// are identical for any thread count; the bit-determinism contract is
// stated for threads == 1.
void set_num_threads(int n);
int num_threads();

// Reads ECNDNET_THREADS, falling back to hardware concurrency.
int default_num_threads();

// Runs fn(i) for i in [begin, end), split into contiguous chunks across
// the worker threads. fn must not touch another index's output.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)> &fn);

} // namespace ecnd
