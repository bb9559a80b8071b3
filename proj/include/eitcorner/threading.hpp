#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace eit {

// Global worker cap (0 = hardware concurrency). Set once by the CLI.
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}

inline int effective_threads(std::size_t n) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    const int cap = thread_cap().load();
    if (cap > 0) hw = std::min(hw, cap);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(hw), n));
}

// Static block partition; each index is processed exactly once and results
// must be written to disjoint slots, so the schedule cannot change outputs.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int nt = effective_threads(n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < nt; ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace eit
