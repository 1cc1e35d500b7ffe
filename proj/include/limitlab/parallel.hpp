#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace limitlab {

// Worker count: LIMITLAB_THREADS if set to a positive integer, else the
// hardware concurrency (at least 1).
inline unsigned default_thread_count() {
    if (const char* env = std::getenv("LIMITLAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(lo, hi) over [begin, end) split into contiguous chunks, one per
// worker. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::int64_t begin, std::int64_t end, unsigned threads, Body&& body) {
    if (end <= begin)
        return;
    const std::int64_t n = end - begin;
    threads = static_cast<unsigned>(std::clamp<std::int64_t>(threads == 0 ? 1 : threads, 1, n));
    if (threads == 1) {
        body(begin, end);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const std::int64_t lo = begin + n * t / threads;
        const std::int64_t hi = begin + n * (t + 1) / threads;
        pool.emplace_back([&, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace limitlab
