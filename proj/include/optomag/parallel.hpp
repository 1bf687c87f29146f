#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace optomag {

/// Runs f(i) for i in [0, n) on up to `threads` workers pulling indices from a shared counter.
/// Returns one exception pointer per index (null on success).
template <class F>
std::vector<std::exception_ptr> parallel_for(int n, int threads, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min(threads, n));
    if (nt == 1) {
        worker();
        return errors;
    }
    std::vector<std::thread> pool;
    for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return errors;
}

/// Rethrows the first captured exception, if any.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace optomag
