#ifndef BUZZLOAD_PARALLEL_HPP
#define BUZZLOAD_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace buzzload {

// Worker count: BUZZLOAD_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
unsigned thread_count();

// Runs body(k) for k in [0, n) on up to thread_count() threads. Each index runs
// exactly once; callers write results into pre-sized slots so output order does
// not depend on scheduling. The first exception thrown by a task is rethrown.
// A call made from inside a task runs sequentially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace buzzload

#endif  // BUZZLOAD_PARALLEL_HPP
