#pragma once

#include <cstddef>
#include <functional>

namespace fedfleet {

/// Worker thread count: FEDFLEET_THREADS if set, else hardware concurrency
/// capped at 8. Always >= 1.
int default_thread_count();

/// Runs fn(0..count-1), splitting contiguous chunks over num_threads
/// (<= 0 means default_thread_count()). Tasks must be independent; the
/// first exception thrown by any worker is rethrown after join.
void parallel_for(std::size_t count, int num_threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace fedfleet
