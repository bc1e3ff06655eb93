#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arcstep {

// Number of worker threads to use: `jobs` if positive, otherwise the
// hardware concurrency (at least 1).
inline std::size_t resolve_jobs(int jobs) {
    if (jobs > 0) return static_cast<std::size_t>(jobs);
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads, static contiguous
// partition. Each index is processed exactly once and results must be
// written to index-addressed storage, so output never depends on the thread
// count. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, int jobs, Body&& body) {
    const std::size_t workers = std::min(resolve_jobs(jobs), n == 0 ? std::size_t{1} : n);
    if (n == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace arcstep
