#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace propinfer {

/// Run fn(i) for i in [0, n) over a bounded worker pool. Each job must write
/// only to its own slot; the first exception wins and is rethrown after join.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         std::size_t max_workers = 0) {
    if (n == 0) return;
    std::size_t hw = std::thread::hardware_concurrency();
    std::size_t pool = max_workers ? max_workers : (hw ? hw : 4);
    pool = std::min(pool, n);
    if (pool <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace propinfer
