#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kcl {

/// Worker count: explicit value if > 0, else KCL_THREADS, else hardware.
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KCL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) over up to `threads` workers. Iterations
/// must write to disjoint outputs; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(resolve_threads(threads),
                                              static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < n; i += threads) body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace kcl
