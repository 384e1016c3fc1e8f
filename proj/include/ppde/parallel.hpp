#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ppde {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
// handled exactly once; callers write results into slot i so the outcome
// does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace ppde
