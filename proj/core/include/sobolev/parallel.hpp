#pragma once

#include <algorithm>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sobolev {

// Runs fn(i) for i in [0, n) on up to `workers` threads and hands each
// result to emit(result) in strict index order, so streamed output is
// deterministic no matter which worker finishes first. emit calls never
// overlap. fn must not throw; report failures inside R.
template <class R>
std::vector<R> ordered_parallel_for(size_t n, int workers, const std::function<R(size_t)>& fn,
                                    const std::function<void(const R&)>& emit) {
    std::vector<R> results(n);
    std::vector<char> done(n, 0);
    std::mutex mu;
    size_t next_task = 0;
    size_t next_emit = 0;

    auto worker = [&] {
        for (;;) {
            size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next_task == n) return;
                i = next_task++;
            }
            R r = fn(i);
            {
                std::lock_guard<std::mutex> lock(mu);
                results[i] = std::move(r);
                done[i] = 1;
                while (next_emit < n && done[next_emit]) {
                    if (emit) emit(results[next_emit]);
                    ++next_emit;
                }
            }
        }
    };

    const int nw = std::max(1, std::min<int>(workers, int(n)));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

}  // namespace sobolev
