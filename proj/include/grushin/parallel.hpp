#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace grushin {

/// Worker cap shared by the batch routines (the CLI sets it from --threads).
inline std::atomic<int>& thread_limit()
{
    static std::atomic<int> limit{1};
    return limit;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers. The first exception
/// thrown by any task is rethrown after all workers finish.
template <class F>
void parallel_for(int n, int threads, F&& f)
{
    threads = std::clamp(threads, 1, std::max(n, 1));
    if (threads == 1) {
        for (int i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

template <class F>
void parallel_for(int n, F&& f)
{
    parallel_for(n, thread_limit().load(), std::forward<F>(f));
}

} // namespace grushin
