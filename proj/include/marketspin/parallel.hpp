#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mspin {

/// Static-partition parallel loop. Each index is processed exactly once and
/// results must be written by index, so the outcome is independent of the
/// thread count; `threads <= 1` degenerates to a plain loop.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    unsigned k = threads;
    if (static_cast<std::size_t>(k) > n) k = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    pool.reserve(k);
    for (unsigned w = 0; w < k; ++w) {
        std::size_t lo = n * w / k;
        std::size_t hi = n * (w + 1) / k;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace mspin
