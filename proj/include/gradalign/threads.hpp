#pragma once

#include <cstddef>
#include <functional>

namespace gradalign {

// Worker count for parallel_for: the GRAD_ALIGN_THREADS environment variable
// when set to a positive value, otherwise (unset or 0) the hardware
// concurrency, with a floor of 1.
std::size_t worker_count();

// Runs fn(i) for every i in [0, n), splitting the index range over
// worker_count() threads; runs inline when one worker suffices. The first
// exception thrown by any fn is rethrown after all workers join. fn must be
// safe to call concurrently for distinct i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gradalign
