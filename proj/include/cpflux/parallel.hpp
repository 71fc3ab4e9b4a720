#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cpflux {

/// Runs body(i) for i in [begin, end) on up to `threads` workers pulling from
/// a shared atomic counter. The first exception wins and is rethrown after
/// all workers drain, so either every index completes or the call throws.
template <typename F>
void parallel_for(int begin, int end, unsigned threads, F&& body) {
    const int count = end - begin;
    if (count <= 0) {
        return;
    }
    unsigned workers = threads == 0 ? 1 : threads;
    if (workers > static_cast<unsigned>(count)) {
        workers = static_cast<unsigned>(count);
    }
    if (workers == 1) {
        for (int i = begin; i < end; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<int> next{begin};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= end || failed.load(std::memory_order_relaxed)) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(work);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

/// Worker count when the caller asked for "auto": CPFLUX_THREADS when set to
/// a positive integer, otherwise hardware concurrency.
inline unsigned default_parallelism() {
    if (const char* env = std::getenv("CPFLUX_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) {
                return static_cast<unsigned>(v);
            }
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace cpflux
