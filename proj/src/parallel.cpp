#include "tempfit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tempfit {

unsigned default_thread_count() {
    if (const char* env = std::getenv("TEMPFIT_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    if (threads == 0) threads = default_thread_count();
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);
}

std::mt19937_64 shard_rng(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t shard) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(shard),
                      static_cast<std::uint32_t>(shard >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace tempfit
