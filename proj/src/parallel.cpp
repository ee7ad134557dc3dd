#include "clusterguard/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace clusterguard {

namespace {

std::atomic<unsigned> g_max_threads{0};

unsigned default_threads() {
    if (const char* env = std::getenv("CLUSTER_GUARD_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void set_max_threads(unsigned n) { g_max_threads = n; }

unsigned max_threads() {
    const unsigned n = g_max_threads.load();
    return n == 0 ? default_threads() : n;
}

std::size_t parallel_chunks(std::size_t n, std::size_t chunks,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return 0;
    chunks = std::clamp<std::size_t>(chunks, 1, n);
    const std::size_t per = (n + chunks - 1) / chunks;
    chunks = (n + per - 1) / per;

    const std::size_t workers = std::min<std::size_t>(max_threads(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c, c * per, std::min(n, (c + 1) * per));
        return chunks;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    fn(c, c * per, std::min(n, (c + 1) * per));
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return chunks;
}

}  // namespace clusterguard
