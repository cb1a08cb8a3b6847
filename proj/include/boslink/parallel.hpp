// parallel.hpp — static-partition worker pool for embarrassingly parallel
// index loops. Results must be written to caller-owned slots indexed by i,
// so output ordering never depends on scheduling.

#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace boslink {

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace boslink
