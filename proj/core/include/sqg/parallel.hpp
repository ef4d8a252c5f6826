#ifndef SQG_PARALLEL_HPP
#define SQG_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace sqg {

/// Worker count from SQG_THREADS (default 1, clamped to [1, 256]).
int thread_count();

/// Calls body(i) for i in [0, n), split into contiguous blocks across
/// thread_count() threads. Each index is handled by exactly one call, so
/// writing results to slot i keeps the output independent of the thread
/// count. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sqg

#endif  // SQG_PARALLEL_HPP
