#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace fdg {

// Worker cap: FDG_THREADS environment variable, else hardware parallelism.
inline int worker_count() {
    if (const char* env = std::getenv("FDG_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(worker, begin, end) over [0, n) split into one contiguous range per
// worker. Reductions that sum per-worker buffers in worker order are
// deterministic for a fixed worker count.
template <typename Fn>
void parallel_ranges(int n, int workers, Fn&& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        if (n > 0) fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const int chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace fdg
