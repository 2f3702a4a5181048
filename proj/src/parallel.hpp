#pragma once

#include <thread>
#include <vector>

namespace hsjp {

// Static partition of [0, n) over `threads` workers; fn(i) is called once per
// index. threads <= 1 runs inline on the calling thread.
template <class F>
void parallel_for(int n, int threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    if (threads > n) threads = n;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    auto run_range = [&fn](int lo, int hi) {
        for (int i = lo; i < hi; ++i) fn(i);
    };
    int chunk = n / threads, rem = n % threads, start = 0;
    std::vector<std::pair<int, int>> ranges;
    for (int t = 0; t < threads; ++t) {
        const int len = chunk + (t < rem ? 1 : 0);
        ranges.emplace_back(start, start + len);
        start += len;
    }
    for (int t = 1; t < threads; ++t)
        pool.emplace_back(run_range, ranges[static_cast<std::size_t>(t)].first,
                          ranges[static_cast<std::size_t>(t)].second);
    run_range(ranges[0].first, ranges[0].second);
    for (auto& th : pool) th.join();
}

}  // namespace hsjp
