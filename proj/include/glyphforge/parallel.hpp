#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace glyphforge {

/// Worker-count cap: GLYPHFORGE_THREADS env var, 0 or unset = one per core.
inline std::size_t max_threads() {
    static const std::size_t n = [] {
        std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("GLYPHFORGE_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v > 0) return static_cast<std::size_t>(v);
        }
        return hw;
    }();
    return n;
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Each index is handled
/// by exactly one worker and fn must not touch another chunk's output, so the
/// result is identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t grain, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = std::min(max_threads(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, grain)));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

} // namespace glyphforge
