#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace dualtake {

// Thread budget: DUALTAKE_THREADS env var, else hardware concurrency.
inline unsigned thread_budget() {
    if (const char* env = std::getenv("DUALTAKE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to their own output slot so results match sequential execution. Nested
// calls degrade to sequential loops.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned threads = std::min<std::size_t>(thread_budget(), n);
    if (threads <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            detail::in_parallel_region = true;
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace dualtake
