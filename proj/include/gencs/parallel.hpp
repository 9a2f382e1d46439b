#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gencs {

/// Run fn(0..n-1) on up to `jobs` threads. Tasks must be independent and must
/// not throw; results keyed by index stay deterministic regardless of
/// scheduling.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (jobs <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> threads;
    const int count = std::min(jobs, n);
    threads.reserve(count);
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

} // namespace gencs
