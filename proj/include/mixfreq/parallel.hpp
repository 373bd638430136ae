#ifndef MIXFREQ_PARALLEL_HPP
#define MIXFREQ_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>

namespace mixfreq {

/// Number of worker threads to use when a caller passes threads <= 0:
/// MIXFREQ_THREADS from the environment if set, otherwise the OpenMP default
/// (1 in builds without OpenMP).
int default_threads();

/// Resolve a user-supplied thread request (<= 0 means "default").
int resolve_threads(int threads);

/// Run fn(i) for i in [0, n). Tasks must be independent and write only to
/// their own slots; under that contract the result is identical for every
/// thread count, and threads == 1 is the serial reference path used by the
/// tests. The first exception thrown by a task is rethrown on the caller.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace mixfreq

#endif  // MIXFREQ_PARALLEL_HPP
