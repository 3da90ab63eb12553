#pragma once

#include <cstdint>
#include <functional>

namespace heatflow {

/// Sets the worker count for parallel_for. Values < 1 are clamped to 1.
/// With 1 thread every parallel_for runs inline on the calling thread.
void set_threads(int n);

int thread_count();

/// Runs chunk_fn over a fixed contiguous partition of [begin, end).
/// The partition depends only on (begin, end, thread_count()), so results of
/// race-free chunk functions are reproducible for a fixed thread count.
/// Nested calls from inside a worker execute inline.
void parallel_for(int64_t begin, int64_t end,
                  const std::function<void(int64_t, int64_t)>& chunk_fn);

}  // namespace heatflow
