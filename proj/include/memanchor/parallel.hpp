#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace memanchor {

// Applies fn to every index in [0, count) with at most `cap` worker threads
// in flight. Results land in caller-owned storage indexed by position, so
// output order never depends on scheduling. The first exception thrown by
// any worker is rethrown after all workers have joined.
template <typename Fn>
void parallel_for_index(std::size_t count, std::size_t cap, Fn&& fn) {
    if (count == 0) return;
    if (cap <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::size_t workers = cap < count ? cap : count;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace memanchor
