#pragma once

// Deterministic parallelism. Work item i must depend only on i (each item
// draws from its own counter-based random stream and writes its own output
// slot), so the set of results is identical for every worker count; callers
// then aggregate the slots in fixed order (pairwise_sum), which makes the
// final numbers bit-identical across 1, 2 or 8 threads.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bmb/common.hpp"

namespace bmb {

inline constexpr int max_threads = 256;

// Worker count: an explicit positive request wins, otherwise the BM_THREADS
// environment variable, otherwise 1.
inline int resolve_threads(int requested = 0) {
    if (requested < 0) throw ConfigError("threads: count must be positive");
    if (requested > 0) return std::min(requested, max_threads);
    if (const char* env = std::getenv("BM_THREADS")) {
        const std::string s(env);
        if (s.empty()) return 1;
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError("BM_THREADS: must be a positive integer, got \"" + s + "\"");
        }
        if (pos != s.size() || v < 1)
            throw ConfigError("BM_THREADS: must be a positive integer, got \"" + s + "\"");
        return static_cast<int>(std::min<long>(v, max_threads));
    }
    return 1;
}

// Runs fn(i) for every i in [0, count). Scheduling is dynamic, but because
// each item is a pure function of i the outcome cannot depend on which
// worker ran it. If items throw, the exception from the smallest index is
// rethrown after all workers drain.
inline void parallel_for(long count, int threads, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    if (!fn) throw ConfigError("parallel_for: missing work function");
    threads = std::clamp<long>(threads, 1, std::min<long>(count, max_threads));
    if (threads == 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::mutex err_mutex;
    long err_index = -1;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            const long i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (err_index < 0 || i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace bmb
