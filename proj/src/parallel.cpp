#include "mixfreq/parallel.hpp"

#include <cstdlib>
#include <mutex>

#ifdef MIXFREQ_HAVE_OPENMP
#include <omp.h>
#endif

namespace mixfreq {

int default_threads() {
    if (const char* env = std::getenv("MIXFREQ_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
#ifdef MIXFREQ_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int resolve_threads(int threads) { return threads <= 0 ? default_threads() : threads; }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int nthreads = resolve_threads(threads);
    if (n == 0) return;

    if (nthreads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

#ifdef MIXFREQ_HAVE_OPENMP
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace mixfreq
