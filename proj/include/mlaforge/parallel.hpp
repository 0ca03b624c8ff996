#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mlaforge {

inline int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(index) for index in [begin, end) on `jobs` threads. Work is
// handed out in contiguous chunks via an atomic cursor; the output each
// index produces must not overlap with any other index.
inline void parallel_for(int64_t begin, int64_t end,
                         const std::function<void(int64_t)>& fn,
                         int jobs = 0, int64_t chunk = 1) {
    if (jobs <= 0) jobs = default_jobs();
    const int64_t count = end - begin;
    if (count <= 0) return;
    if (jobs == 1 || count == 1) {
        for (int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    jobs = static_cast<int>(std::min<int64_t>(jobs, count));
    std::atomic<int64_t> cursor{begin};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int64_t lo = cursor.fetch_add(chunk);
            if (lo >= end) return;
            const int64_t hi = std::min(end, lo + chunk);
            try {
                for (int64_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs - 1);
    for (int t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace mlaforge
