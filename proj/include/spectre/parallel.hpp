#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace spectre {

/// Run fn(i) for i in [0, n) on up to hardware_concurrency workers. Results
/// must be written into per-index slots by the caller so the outcome is
/// independent of scheduling. The first exception (lowest index) rethrows.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, bool enable = true) {
    if (n == 0) return;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = enable ? static_cast<unsigned>(std::min<std::size_t>(hw, n)) : 1u;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace spectre
