#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mgd {

// Worker count comes from MGD_THREADS; unset means fully serial, which is the
// reproducibility default. Results never depend on the count because every
// work item is a pure function of its index.
inline int worker_count() {
    const char* env = std::getenv("MGD_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    if (n < 1) return 1;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0 && n > int(hw) * 4) n = int(hw) * 4;
    return n;
}

template <typename Fn>
void parallel_for(int64_t n, Fn&& fn, int workers = worker_count()) {
    if (n <= 0) return;
    if (workers <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    auto run = [&] {
        for (;;) {
            int64_t i = next.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int count = int(std::min<int64_t>(workers, n));
    pool.reserve(count - 1);
    for (int t = 1; t < count; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace mgd
