#pragma once

#include <cstddef>
#include <functional>

namespace vjdet {

/// Hardware concurrency, at least 1.
int default_thread_count();

/// Runs fn(begin, end) over a static partition of [0, n) on `threads`
/// threads. threads <= 1 executes inline. Exceptions from workers are
/// rethrown on the calling thread.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace vjdet
