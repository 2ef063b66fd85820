// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace s2t {

std::size_t worker_count() {
    static const std::size_t n = [] {
        std::size_t hw = std::thread::hardware_concurrency();
        if (hw == 0) hw = 1;
        if (const char* env = std::getenv("SPLAT2TWIN_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1 && static_cast<std::size_t>(v) < hw) hw = static_cast<std::size_t>(v);
        }
        return hw;
    }();
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = worker_count();
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        // Chunked work stealing; chunk size keeps contention low while
        // preserving ascending order within a chunk.
        const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 8));
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) break;
            const std::size_t end = std::min(n, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace s2t
