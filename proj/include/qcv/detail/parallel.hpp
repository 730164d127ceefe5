#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qcv::detail {

/// Static block-partitioned parallel loop. Results must be written to
/// preassigned slots so the outcome is independent of the worker count.
/// max_threads <= 0 means hardware concurrency.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         int max_threads = 0) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 4;
    std::size_t workers = max_threads > 0 ? static_cast<std::size_t>(max_threads) : hw;
    if (workers > n) workers = n;
    if (n == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace qcv::detail
