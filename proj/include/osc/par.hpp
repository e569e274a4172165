#pragma once

#include <atomic>
#include <thread>
#include <vector>

#include "osc/grid.hpp"

namespace osc {

/// Runs fn(i) for i in [0, count) across up to `jobs` worker threads.
/// Work items are claimed from a shared counter; results must be written to
/// disjoint slots so the outcome is independent of the job count.
template <typename Fn>
void parallel_for(Index count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    auto worker = [&]() {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

int default_jobs();

}  // namespace osc
